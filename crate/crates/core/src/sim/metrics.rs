use serde::Serialize;

use crate::ids::{MessageId, TxId};

/// Per-conflict result of a tangle scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictOutcome {
    pub winner: Option<TxId>,
    pub winner_message: Option<MessageId>,
    pub rejected_payloads: Vec<MessageId>,
    pub remerged_count: usize,
    pub resolved_at: f64,
}

/// Measurements of one experiment. Fields that were not measured are `None`
/// and print as `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsRow {
    pub tps: Option<f64>,
    pub mean_confirmation_time: Option<f64>,
    pub orphan_rate: Option<f64>,
    pub agreement_rate: Option<f64>,
    pub mean_termination_round: Option<f64>,
    /// Runs in which some honest node had not finalized by round `M`.
    pub not_finalized_rate: Option<f64>,
    pub conflicts_resolved: Option<usize>,
    pub conflict_outcomes: Vec<ConflictOutcome>,
    /// Messages attached during the run.
    pub attached: Option<u64>,
    pub duration: Option<f64>,
}
