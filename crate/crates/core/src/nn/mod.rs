//! Dense numerics: a two-hidden-layer rectifier network, Adam, and the
//! product kernel used by GP-SARSA.

mod adam;
mod kernel;
mod net;

pub use adam::Adam;
pub use kernel::{gram, kernel, linear_kernel};
pub use net::{dlogpi_dlogits, masked_softmax, Cache, Net2};
