//! Monte-Carlo FPC experiments and parameter sweeps.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::GridBlock;
use crate::fpc::{run_fpc, FpcConfig, FpcError, FpcOutcome, QuorumCounters};
use crate::sim::metrics::MetricsRow;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("runs must be at least 1")]
    NoRuns,
    #[error(transparent)]
    Fpc(#[from] FpcError),
    #[error("grid point N={n} k={k} is infeasible: k must be at most N-1")]
    InfeasibleGridPoint { n: usize, k: usize },
}

/// Aggregate of `runs` FPC instances with seeds `seed..seed + runs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpcSummary {
    pub runs: usize,
    pub agreed: usize,
    pub not_finalized: usize,
    pub mean_termination_round: f64,
    pub counters: QuorumCounters,
}

impl FpcSummary {
    pub fn agreement_rate(&self) -> f64 {
        self.agreed as f64 / self.runs as f64
    }

    pub fn not_finalized_rate(&self) -> f64 {
        self.not_finalized as f64 / self.runs as f64
    }

    /// Share of sampled quorums that held no adversary.
    pub fn masking_rate(&self) -> f64 {
        if self.counters.quorums == 0 {
            return 0.0;
        }
        self.counters.quorums_without_adversary as f64 / self.counters.quorums as f64
    }

    pub fn to_row(&self) -> MetricsRow {
        MetricsRow {
            agreement_rate: Some(self.agreement_rate()),
            mean_termination_round: Some(self.mean_termination_round),
            not_finalized_rate: Some(self.not_finalized_rate()),
            ..Default::default()
        }
    }
}

pub fn run_fpc_runs(config: &FpcConfig, runs: usize) -> Result<Vec<FpcOutcome>, ExperimentError> {
    if runs == 0 {
        return Err(ExperimentError::NoRuns);
    }
    (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let c = FpcConfig {
                seed: config.seed.wrapping_add(i),
                ..config.clone()
            };
            run_fpc(&c).map_err(ExperimentError::from)
        })
        .collect()
}

pub fn summarize(outcomes: &[FpcOutcome]) -> FpcSummary {
    let runs = outcomes.len();
    let mut counters = QuorumCounters::default();
    for o in outcomes {
        counters.quorums += o.counters.quorums;
        counters.quorums_without_adversary += o.counters.quorums_without_adversary;
    }
    FpcSummary {
        runs,
        agreed: outcomes.iter().filter(|o| o.agreed).count(),
        not_finalized: outcomes.iter().filter(|o| !o.all_finalized).count(),
        mean_termination_round: outcomes.iter().map(|o| o.mean_termination_round).sum::<f64>() / runs as f64,
        counters,
    }
}

pub fn run_fpc_summary(config: &FpcConfig, runs: usize) -> Result<FpcSummary, ExperimentError> {
    Ok(summarize(&run_fpc_runs(config, runs)?))
}

pub fn run_fpc_experiment(config: &FpcConfig, runs: usize) -> Result<MetricsRow, ExperimentError> {
    Ok(run_fpc_summary(config, runs)?.to_row())
}

/// One sweep row: the point's config and its result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: FpcConfig,
    pub runs: usize,
    pub result: Result<FpcSummary, ExperimentError>,
}

/// Expands grid blocks over a base config, in grid order.
pub fn grid_configs(base: &FpcConfig, grid: &[GridBlock]) -> Vec<FpcConfig> {
    grid.iter()
        .flat_map(|b| b.points().collect::<Vec<_>>())
        .map(|(n, k, q)| FpcConfig {
            n,
            k,
            q,
            mana_weights: None,
            ..base.clone()
        })
        .collect()
}

/// Runs every grid point (in parallel) and returns rows in grid order.
/// Infeasible points become error rows instead of aborting the sweep.
pub fn run_fpc_sweep(base: &FpcConfig, grid: &[GridBlock], runs: usize) -> Vec<SweepRow> {
    grid_configs(base, grid)
        .into_par_iter()
        .map(|config| {
            let result = if config.k + 1 > config.n {
                Err(ExperimentError::InfeasibleGridPoint { n: config.n, k: config.k })
            } else {
                config
                    .validate()
                    .map_err(|v| ExperimentError::Fpc(FpcError::Invalid(v)))
                    .and_then(|_| run_fpc_summary(&config, runs))
            };
            SweepRow { config, runs, result }
        })
        .collect()
}
