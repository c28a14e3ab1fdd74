//! Parallel path simulation.
//!
//! Each path draws from its own stream, so distributing paths over threads
//! changes nothing: results are collected in path-id order and aggregated
//! serially, which makes the output bit-identical to `run_batch`.

use ammfee_core::{path_runner, AssetGrid, BatchResult, MarketParams, SimConfig, Strategy};
use rayon::prelude::*;

use crate::error::CliError;

pub fn run_batch_parallel(
    cfg: &SimConfig,
    strat: &Strategy,
    params: &MarketParams,
    grid: &AssetGrid,
) -> Result<BatchResult, CliError> {
    let run = path_runner(cfg, strat, params, grid)?;
    let paths = (0..cfg.n_paths)
        .into_par_iter()
        .map(&run)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BatchResult::from_paths(cfg, paths)?)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool for 0.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("sim.threads: {e}")))?;
    Ok(pool.install(f))
}
