//! Index-parallel map with a sequential fallback. Results are always in
//! index order and each item must depend only on its index, so both modes
//! produce identical output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    /// Uses rayon when built with the `parallel` feature; sequential otherwise.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

pub fn map_indexed<T, F>(n: usize, mode: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let f = |i: usize| i * i + 1;
        let a = map_indexed(1000, ExecMode::Sequential, f);
        let b = map_indexed(1000, ExecMode::Parallel, f);
        assert_eq!(a, b);
        assert_eq!(a[10], 101);
        assert!(map_indexed(0, ExecMode::Parallel, f).is_empty());
    }
}
