//! Fast probabilistic consensus on a single binary question.
//!
//! Every round each undecided honest node queries `k` peers, computes the
//! (optionally mana-weighted) fraction `eta` of Like answers and adopts Like
//! iff `eta` exceeds the round threshold. Round 1 uses `tau`; later rounds use
//! a common threshold drawn uniformly from `[beta, 1 - beta]` by a shared
//! beacon. A node finalizes after its opinion stayed unchanged for `l`
//! consecutive rounds.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::InvariantViolation;
use crate::ids::NodeId;
use crate::mana::ManaView;
use crate::rng::{labelled, SimRng, StreamSplitter};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Opinion {
    Like,
    Dislike,
}

impl Opinion {
    pub fn flip(self) -> Self {
        match self {
            Opinion::Like => Opinion::Dislike,
            Opinion::Dislike => Opinion::Like,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AdversaryStrategy {
    /// Answer the opinion held by the honest minority at the end of the
    /// previous round (Like on a tie).
    #[default]
    InverseMajority,
    FixedLike,
    FixedDislike,
    /// A fresh coin flip for every query.
    RandomOpinion,
}

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 0.3;
pub const DEFAULT_L: u32 = 8;
pub const DEFAULT_M: u32 = 100;
pub const DEFAULT_P0: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpcConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub q: f64,
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_l")]
    pub l: u32,
    #[serde(rename = "M", default = "default_m")]
    pub m: u32,
    #[serde(rename = "manaWeighting", default)]
    pub mana_weighting: bool,
    /// Per-node consensus mana for weighted mode; equal weights when absent.
    #[serde(rename = "manaWeights", default, skip_serializing_if = "Option::is_none")]
    pub mana_weights: Option<Vec<f64>>,
    #[serde(rename = "adversaryStrategy", default)]
    pub adversary_strategy: AdversaryStrategy,
    #[serde(default)]
    pub seed: u64,
}

fn default_p0() -> f64 {
    DEFAULT_P0
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_l() -> u32 {
    DEFAULT_L
}
fn default_m() -> u32 {
    DEFAULT_M
}

impl FpcConfig {
    pub fn new(n: usize, k: usize, q: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            q,
            p0: DEFAULT_P0,
            tau: DEFAULT_TAU,
            beta: DEFAULT_BETA,
            l: DEFAULT_L,
            m: DEFAULT_M,
            mana_weighting: false,
            mana_weights: None,
            adversary_strategy: AdversaryStrategy::default(),
            seed,
        }
    }

    pub fn adversary_count(&self) -> usize {
        (self.q * self.n as f64 + 1e-9).floor() as usize
    }

    pub fn honest_count(&self) -> usize {
        self.n - self.adversary_count()
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        let fail = |key: &str, constraint: &str| Err(InvariantViolation::new(key, constraint));
        if self.n < 2 {
            return fail("N", "N ≥ 2");
        }
        if self.k < 1 || self.k > self.n - 1 {
            return fail("k", "k ≤ N−1");
        }
        if !(0.0..=0.5).contains(&self.q) {
            return fail("q", "q ∈ [0, 0.5]");
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return fail("p0", "p0 ∈ [0, 1]");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return fail("tau", "tau ∈ (0, 1)");
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return fail("beta", "beta ∈ (0, 0.5)");
        }
        if self.l < 1 {
            return fail("l", "l ≥ 1");
        }
        if self.m < self.l {
            return fail("M", "M ≥ l");
        }
        if let Some(w) = &self.mana_weights {
            if w.len() != self.n {
                return fail("manaWeights", "one weight per node");
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return fail("manaWeights", "weights finite and ≥ 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FpcError {
    #[error("quorum of {k} needs more than the {available} available responders")]
    QuorumInfeasible { k: usize, available: usize },
    #[error(transparent)]
    Invalid(#[from] InvariantViolation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoterState {
    pub node: NodeId,
    pub honest: bool,
    pub opinion: Opinion,
    pub unchanged_streak: u32,
    pub finalized: bool,
    pub termination_round: Option<u32>,
}

impl VoterState {
    pub fn new(index: usize, honest: bool, opinion: Opinion) -> Self {
        Self {
            node: NodeId::simulated(index),
            honest,
            opinion,
            unchanged_streak: 0,
            finalized: false,
            termination_round: None,
        }
    }
}

/// Quorum statistics, used to check how often adversaries go unqueried.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QuorumCounters {
    pub quorums: u64,
    pub quorums_without_adversary: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpcOutcome {
    pub per_node: Vec<(Opinion, Option<u32>)>,
    pub honest: Vec<bool>,
    pub agreed: bool,
    /// Most common final opinion among honest nodes; `None` on a tie.
    pub majority_opinion: Option<Opinion>,
    pub rounds_run: u32,
    /// Mean honest termination round, counting unfinished nodes as `M`.
    pub mean_termination_round: f64,
    pub all_finalized: bool,
    pub counters: QuorumCounters,
}

/// Synthetic initial opinions: `ceil(p0 * honest)` honest nodes like, chosen
/// by a seeded shuffle. Adversaries start with Like; their answers are driven
/// by the strategy.
pub fn initial_opinions<R: Rng + ?Sized>(honest: &[bool], p0: f64, rng: &mut R) -> Vec<Opinion> {
    let mut idx: Vec<usize> = (0..honest.len()).filter(|i| honest[*i]).collect();
    let likes = ((p0 * idx.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    idx.shuffle(rng);
    let mut out = vec![Opinion::Dislike; honest.len()];
    for (i, h) in honest.iter().enumerate() {
        if !h {
            out[i] = Opinion::Like;
        }
    }
    for i in idx.into_iter().take(likes) {
        out[i] = Opinion::Like;
    }
    out
}

/// Integrated mode: a node likes the conflict member it received first and
/// dislikes the others. Arrivals are `(time, member)`; ties keep input order.
pub fn first_seen<T: Copy + PartialEq>(arrivals: &[(SimTime, T)]) -> Vec<(T, Opinion)> {
    let first = arrivals
        .iter()
        .enumerate()
        .min_by_key(|(i, (t, _))| (*t, *i))
        .map(|(_, (_, m))| *m);
    arrivals
        .iter()
        .map(|(_, m)| (*m, if Some(*m) == first { Opinion::Like } else { Opinion::Dislike }))
        .collect()
}

/// Common threshold for `round ≥ 2`, uniform on `[beta, 1 - beta]`.
pub fn drng_threshold(round: u32, seed: u64, beta: f64) -> f64 {
    let mut rng = labelled(seed, round as u64);
    beta + (1.0 - 2.0 * beta) * rng.random::<f64>()
}

pub fn round_threshold(config: &FpcConfig, round: u32) -> f64 {
    if round <= 1 {
        config.tau
    } else {
        drng_threshold(round, config.seed, config.beta)
    }
}

/// Weighted share of Like among `(weight, answer)` responses; plain share
/// when every weight is zero.
pub fn eta(responses: &[(f64, Opinion)]) -> f64 {
    let total: f64 = responses.iter().map(|(w, _)| w).sum();
    if total > 0.0 {
        responses.iter().filter(|(_, o)| *o == Opinion::Like).map(|(w, _)| w).sum::<f64>() / total
    } else if responses.is_empty() {
        0.0
    } else {
        responses.iter().filter(|(_, o)| *o == Opinion::Like).count() as f64 / responses.len() as f64
    }
}

/// Opinion held by fewer honest nodes; Like on a tie.
fn honest_minority(states: &[VoterState]) -> Opinion {
    let likes = states.iter().filter(|s| s.honest && s.opinion == Opinion::Like).count();
    let honest = states.iter().filter(|s| s.honest).count();
    if likes * 2 <= honest {
        Opinion::Like
    } else {
        Opinion::Dislike
    }
}

/// How responders are drawn.
#[derive(Debug, Clone)]
pub enum QuorumSampler {
    /// `k` distinct peers, uniformly, never self.
    Uniform,
    /// `k` draws with replacement proportional to weight, never self.
    Weighted { weights: Vec<f64>, index: Option<WeightedIndex<f64>> },
}

impl QuorumSampler {
    pub fn weighted(weights: Vec<f64>) -> Self {
        let index = WeightedIndex::new(&weights).ok();
        QuorumSampler::Weighted { weights, index }
    }

    pub fn from_view(nodes: &[NodeId], view: &dyn ManaView) -> Self {
        Self::weighted(nodes.iter().map(|n| view.weight(n)).collect())
    }

    fn weight(&self, j: usize) -> f64 {
        match self {
            QuorumSampler::Uniform => 1.0,
            QuorumSampler::Weighted { weights, .. } => weights[j],
        }
    }

    fn draw<R: Rng + ?Sized>(&self, me: usize, n: usize, k: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        match self {
            QuorumSampler::Uniform => {
                out.extend(index::sample(rng, n - 1, k).into_iter().map(|j| if j >= me { j + 1 } else { j }));
            }
            QuorumSampler::Weighted { weights, index } => {
                let others_weighted = weights.iter().enumerate().any(|(j, w)| j != me && *w > 0.0);
                while out.len() < k {
                    let j = match index {
                        Some(ix) if others_weighted => ix.sample(rng),
                        _ => rng.random_range(0..n),
                    };
                    if j != me {
                        out.push(j);
                    }
                }
            }
        }
    }
}

/// One synchronous round. Answers come from the opinions held at the start of
/// the round; finalized nodes keep answering but no longer update.
#[allow(clippy::too_many_arguments)]
pub fn fpc_round<R: Rng + ?Sized>(
    states: &mut [VoterState],
    config: &FpcConfig,
    round: u32,
    sampler: &QuorumSampler,
    rng: &mut R,
    counters: &mut QuorumCounters,
) -> Result<(), FpcError> {
    let n = states.len();
    if config.k > n.saturating_sub(1) {
        return Err(FpcError::QuorumInfeasible { k: config.k, available: n.saturating_sub(1) });
    }
    let threshold = round_threshold(config, round);
    let inverse = honest_minority(states);
    let snapshot: Vec<(bool, Opinion)> = states.iter().map(|s| (s.honest, s.opinion)).collect();
    let mut quorum = Vec::with_capacity(config.k);
    let mut responses = Vec::with_capacity(config.k);
    let mut next = Vec::with_capacity(n);

    for (i, s) in states.iter().enumerate() {
        if !s.honest || s.finalized {
            next.push(None);
            continue;
        }
        sampler.draw(i, n, config.k, rng, &mut quorum);
        counters.quorums += 1;
        let mut saw_adversary = false;
        responses.clear();
        for &j in &quorum {
            let (honest, opinion) = snapshot[j];
            let answer = if honest {
                opinion
            } else {
                saw_adversary = true;
                match config.adversary_strategy {
                    AdversaryStrategy::InverseMajority => inverse,
                    AdversaryStrategy::FixedLike => Opinion::Like,
                    AdversaryStrategy::FixedDislike => Opinion::Dislike,
                    AdversaryStrategy::RandomOpinion => {
                        if rng.random::<bool>() {
                            Opinion::Like
                        } else {
                            Opinion::Dislike
                        }
                    }
                }
            };
            responses.push((sampler.weight(j), answer));
        }
        if !saw_adversary {
            counters.quorums_without_adversary += 1;
        }
        let e = eta(&responses);
        next.push(Some(if e > threshold { Opinion::Like } else { Opinion::Dislike }));
    }

    for (s, new) in states.iter_mut().zip(next) {
        let Some(new) = new else { continue };
        if new == s.opinion {
            s.unchanged_streak += 1;
        } else {
            s.opinion = new;
            s.unchanged_streak = 0;
        }
        if s.unchanged_streak >= config.l {
            s.finalized = true;
            s.termination_round = Some(round);
        }
    }
    Ok(())
}

/// Runs a synthetic FPC instance: adversaries and initial opinions come from
/// the seed.
pub fn run_fpc(config: &FpcConfig) -> Result<FpcOutcome, FpcError> {
    config.validate()?;
    let mut streams = StreamSplitter::new(config.seed);
    let mut setup_rng = streams.split();
    let mut order: Vec<usize> = (0..config.n).collect();
    order.shuffle(&mut setup_rng);
    let mut honest = vec![true; config.n];
    for &i in order.iter().take(config.adversary_count()) {
        honest[i] = false;
    }
    let opinions = initial_opinions(&honest, config.p0, &mut setup_rng);
    run_fpc_from(config, &honest, &opinions, &mut streams.split())
}

/// Runs FPC from given honesty flags and initial opinions.
pub fn run_fpc_from(
    config: &FpcConfig,
    honest: &[bool],
    opinions: &[Opinion],
    rng: &mut SimRng,
) -> Result<FpcOutcome, FpcError> {
    assert_eq!(honest.len(), opinions.len());
    let mut states: Vec<VoterState> = honest
        .iter()
        .zip(opinions)
        .enumerate()
        .map(|(i, (h, o))| VoterState::new(i, *h, *o))
        .collect();
    let sampler = if config.mana_weighting {
        QuorumSampler::weighted(config.mana_weights.clone().unwrap_or_else(|| vec![1.0; states.len()]))
    } else {
        QuorumSampler::Uniform
    };
    let mut counters = QuorumCounters::default();
    let mut rounds_run = 0;
    for round in 1..=config.m {
        if states.iter().all(|s| !s.honest || s.finalized) {
            break;
        }
        fpc_round(&mut states, config, round, &sampler, rng, &mut counters)?;
        rounds_run = round;
    }
    Ok(outcome(&states, config.m, rounds_run, counters))
}

fn outcome(states: &[VoterState], m: u32, rounds_run: u32, counters: QuorumCounters) -> FpcOutcome {
    let honest: Vec<&VoterState> = states.iter().filter(|s| s.honest).collect();
    let all_finalized = honest.iter().all(|s| s.finalized);
    let likes = honest.iter().filter(|s| s.opinion == Opinion::Like).count();
    let dislikes = honest.len() - likes;
    let agreed = all_finalized && (likes == 0 || dislikes == 0);
    let majority_opinion = match likes.cmp(&dislikes) {
        std::cmp::Ordering::Greater => Some(Opinion::Like),
        std::cmp::Ordering::Less => Some(Opinion::Dislike),
        std::cmp::Ordering::Equal => None,
    };
    let mean_termination_round = if honest.is_empty() {
        0.0
    } else {
        honest.iter().map(|s| s.termination_round.unwrap_or(m) as f64).sum::<f64>() / honest.len() as f64
    };
    FpcOutcome {
        per_node: states
            .iter()
            .map(|s| (s.opinion, if s.honest { s.termination_round } else { None }))
            .collect(),
        honest: states.iter().map(|s| s.honest).collect(),
        agreed,
        majority_opinion,
        rounds_run,
        mean_termination_round,
        all_finalized,
        counters,
    }
}
