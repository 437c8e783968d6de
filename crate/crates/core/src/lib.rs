//! Simulated task-oriented dialogue benchmark: domains, an agenda-based user
//! simulator, a noisy semantic channel, a rule-based belief tracker, summary
//! actions, and reference reinforcement-learning dialogue policies.

pub mod actions;
pub mod config;
pub mod domain;
pub mod env;
pub mod error;
pub mod error_channel;
pub mod exec;
pub mod harness;
pub mod nn;
pub mod policy;
pub mod seeding;
pub mod semantics;
pub mod tracker;
pub mod user;

pub use error::{Error, Result};
