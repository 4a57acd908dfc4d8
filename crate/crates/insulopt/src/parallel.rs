use insulopt_core::shape::ProbeExecutor;
use insulopt_core::Result;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::CliError;

pub fn thread_pool(threads: usize) -> std::result::Result<ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start {threads} worker threads: {e}")))
}

/// Runs gradient probes on a rayon pool; results keep index order.
pub struct RayonProbes<'a> {
    pub pool: &'a ThreadPool,
}

impl ProbeExecutor for RayonProbes<'_> {
    fn run(&self, count: usize, probe: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Vec<Result<f64>> {
        self.pool.install(|| (0..count).into_par_iter().map(probe).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let pool = thread_pool(3).unwrap();
        let r = RayonProbes { pool: &pool }.run(50, &|k| Ok(k as f64 * 0.5));
        assert!(r.iter().enumerate().all(|(k, v)| *v.as_ref().unwrap() == k as f64 * 0.5));
    }
}
