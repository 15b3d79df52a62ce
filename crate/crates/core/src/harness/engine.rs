use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Worker pool for independent trials. Results come back in trial order, so the
/// output does not depend on the number of workers.
pub struct Engine {
    pool: ThreadPool,
}

impl Engine {
    /// `workers = None` (or 0) uses the machine's parallelism.
    pub fn new(workers: Option<usize>) -> Result<Self> {
        let n = workers.unwrap_or(0);
        let pool = ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Run `f(0..n)`; the first failing trial (by index) is reported.
    pub fn run<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync,
    {
        let results: Vec<Result<T>> = self.pool.install(|| (0..n).into_par_iter().map(&f).collect());
        results
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.map_err(|e| Error::Trial {
                    trial: i,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}
