//! Experiment drivers: the event queue, FPC sweeps and tangle scenarios.

pub mod events;
pub mod experiment;
pub mod metrics;
pub mod scenario;

pub use experiment::{run_fpc_experiment, run_fpc_sweep, ExperimentError, FpcSummary, SweepRow};
pub use metrics::{ConflictOutcome, MetricsRow};
pub use scenario::{run_tangle_scenario, ScenarioConfig, ScenarioError, ScenarioOutcome};
