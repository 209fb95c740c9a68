//! Replica execution strategy.
//!
//! Every Monte Carlo routine maps a pure function over replica indices and
//! then folds the results in index order. Parallel executors only change the
//! evaluation order of the map, never the fold, so estimates are bitwise
//! identical across thread counts.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), ..., f(n - 1)` and returns them in index order.
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs replicas one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
