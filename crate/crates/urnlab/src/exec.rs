//! Rayon-backed replica executor.

use rayon::prelude::*;
use urnlab_core::exec::Executor;

/// Runs replica maps on a dedicated thread pool. Results come back in index
/// order, so output does not depend on the thread count.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

/// Machine parallelism, falling back to one thread.
pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use urnlab_core::exec::Sequential;

    #[test]
    fn matches_sequential_order() {
        let par = Parallel::new(3).unwrap();
        let f = |i: usize| i * i + 1;
        assert_eq!(par.map(1000, f), Sequential.map(1000, f));
    }
}
