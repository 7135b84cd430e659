use rayon::prelude::*;

use safebai::bai::{run, RunRecord};
use safebai::instance::{substream, Environment};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Stream channel feeding the environment's noise.
pub const ENV_CHANNEL: u64 = 0;
/// Stream channel feeding the algorithm's own randomness.
pub const ALGO_CHANNEL: u64 = 1;

/// Runs replication `index` of `cfg`.
pub fn run_one(cfg: &ExperimentConfig, index: u64) -> Result<RunRecord> {
    let inst = cfg.build_instance()?;
    let algo = cfg.algo_config(&inst);
    let seed = cfg.experiment.master_seed;
    let mut env = Environment::new(inst, cfg.instance.sigma_r, cfg.instance.sigma_s, substream(seed, index, ENV_CHANNEL))
        .map_err(|e| Error::Config(e.to_string()))?;
    run(&mut env, &mut substream(seed, index, ALGO_CHANNEL), &algo).map_err(|e| Error::Config(e.to_string()))
}

/// Runs every replication on a pool of `workers` threads; results are
/// ordered by replication index whatever the pool size.
pub fn run_replications(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<RunRecord>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers.or(cfg.experiment.workers) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let n = cfg.experiment.replications as u64;
    pool.install(|| (0..n).into_par_iter().map(|i| run_one(cfg, i)).collect())
}
