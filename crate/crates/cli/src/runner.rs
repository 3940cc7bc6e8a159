//! Parallel Monte Carlo driver.

use rayon::prelude::*;
use shiftproj_core::{aggregate, run_trial, ExperimentConfig, MonteCarloReport, Result};

/// Trials run in a parallel map; outcomes keep trial order, so the report
/// is identical to the sequential one.
pub fn monte_carlo_parallel(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let outcomes = (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect();
    Ok(aggregate(cfg, outcomes))
}
