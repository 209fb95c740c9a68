//! Thread-pool executor for replica maps.

use cobra_core::exec::Executor;
use rayon::prelude::*;
use rayon::ThreadPool;

/// Runs replicas on a dedicated rayon pool. Results come back in replica
/// order, so estimates are identical for every thread count.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    /// `threads = 0` uses one thread per available core.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?;
        Ok(Parallel { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}
