//! Adaptive proof-of-work difficulty and the access-mana issuance quota.
//!
//! A node's difficulty grows linearly with the number of messages it attached
//! inside a sliding window: `d = d0 + ceil(gamma * max(0, r - allowance))`.
//! Solving time is simulated as a geometric number of hash attempts.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::mana::{ManaKind, ManaLedger};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct PowParams {
    pub base_difficulty: u32,
    pub gamma: f64,
    pub window_seconds: f64,
    /// Hashes per sim-second.
    pub hash_rate: f64,
    /// Issuances per window that do not raise the difficulty.
    pub allowance: u32,
}

impl Default for PowParams {
    fn default() -> Self {
        Self {
            base_difficulty: 8,
            gamma: 0.1,
            window_seconds: 60.0,
            hash_rate: 1e6,
            allowance: 0,
        }
    }
}

impl PowParams {
    pub fn difficulty_for_count(&self, recent: usize) -> u32 {
        let excess = recent.saturating_sub(self.allowance as usize) as f64;
        let extra = (self.gamma * excess).ceil();
        // Anything past 1100 bits is unsolvable in f64 anyway.
        self.base_difficulty.saturating_add(extra.min(1100.0) as u32)
    }

    pub fn expected_work_time(&self, difficulty: u32) -> f64 {
        (difficulty as f64).exp2() / self.hash_rate
    }

    /// Samples the time to solve a puzzle: a geometric attempt count with
    /// success probability 2^-difficulty, divided by the hash rate.
    pub fn pow_work_time<R: Rng + ?Sized>(&self, difficulty: u32, rng: &mut R) -> f64 {
        geometric_attempts(difficulty, rng) / self.hash_rate
    }
}

/// Number of attempts until the first success, by inversion. Returns +inf when
/// the success probability underflows.
pub fn geometric_attempts<R: Rng + ?Sized>(difficulty: u32, rng: &mut R) -> f64 {
    if difficulty == 0 {
        return 1.0;
    }
    let p = (-(difficulty as f64)).exp2();
    if p == 0.0 {
        return f64::INFINITY;
    }
    let u = 1.0 - rng.random::<f64>(); // (0, 1]
    (u.ln() / (-p).ln_1p()).floor() + 1.0
}

/// Per-node record of recent successful attachments.
#[derive(Debug, Clone, Default)]
pub struct RateState {
    params: PowParams,
    history: HashMap<NodeId, VecDeque<SimTime>>,
}

impl RateState {
    pub fn new(params: PowParams) -> Self {
        Self {
            params,
            history: HashMap::new(),
        }
    }

    pub fn params(&self) -> &PowParams {
        &self.params
    }

    fn window(&self) -> SimTime {
        SimTime::from_secs_f64(self.params.window_seconds)
    }

    /// Issuances by `node` in `(now - W, now]`.
    pub fn recent_count(&self, node: &NodeId, now: SimTime) -> usize {
        let window = self.window();
        self.history.get(node).map_or(0, |h| {
            h.iter().filter(|t| **t <= now && **t + window > now).count()
        })
    }

    pub fn difficulty_for(&self, node: &NodeId, now: SimTime) -> u32 {
        self.params.difficulty_for_count(self.recent_count(node, now))
    }

    pub fn record_issuance(&mut self, node: NodeId, at: SimTime) {
        let window = self.window();
        let h = self.history.entry(node).or_default();
        h.push_back(at);
        while h.front().is_some_and(|t| *t + window <= at) {
            h.pop_front();
        }
    }
}

/// Messages per sim-second `node` may issue: its access-mana share of the
/// network budget.
pub fn scheduler_quota(mana: &ManaLedger, node: &NodeId, now: SimTime, budget: f64) -> f64 {
    assert!(budget > 0.0, "issue budget must be positive");
    mana.mana_share(node, ManaKind::Access, now) * budget
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mana::ManaParams;
    use crate::rng::StreamSplitter;

    #[test]
    fn difficulty_formula() {
        let p = PowParams::default();
        assert_eq!(p.difficulty_for_count(0), 8);
        assert_eq!(p.difficulty_for_count(25), 11);
        assert_eq!(p.difficulty_for_count(200), 28);
        let t = p.expected_work_time(28);
        assert!((t - 268.435456).abs() < 1e-9);
    }

    #[test]
    fn allowance_keeps_base_difficulty() {
        let p = PowParams { allowance: 100, ..Default::default() };
        assert_eq!(p.difficulty_for_count(100), 8);
        assert_eq!(p.difficulty_for_count(101), 9);
    }

    #[test]
    fn window_counts_half_open_interval() {
        let node = NodeId::simulated(0);
        let mut s = RateState::new(PowParams::default());
        s.record_issuance(node, SimTime::from_secs_f64(0.0));
        s.record_issuance(node, SimTime::from_secs_f64(30.0));
        assert_eq!(s.recent_count(&node, SimTime::from_secs_f64(59.9)), 2);
        assert_eq!(s.recent_count(&node, SimTime::from_secs_f64(60.0)), 1);
        assert_eq!(s.difficulty_for(&node, SimTime::from_secs_f64(60.0)), 9);
        assert_eq!(s.difficulty_for(&NodeId::simulated(1), SimTime::ZERO), 8);
    }

    #[test]
    fn zero_difficulty_is_one_attempt() {
        let mut rng = StreamSplitter::new(3).split();
        let p = PowParams::default();
        assert_eq!(p.pow_work_time(0, &mut rng), 1.0 / p.hash_rate);
    }

    #[test]
    fn geometric_mean_at_difficulty_8() {
        let mut rng = StreamSplitter::new(11).split();
        let p = PowParams::default();
        let n = 10_000;
        let mean = (0..n).map(|_| p.pow_work_time(8, &mut rng)).sum::<f64>() / n as f64;
        let expected = 256.0 / p.hash_rate;
        assert!(mean > 0.9 * expected && mean < 1.1 * expected, "{mean}");
    }

    #[test]
    fn difficulty_60_is_unreachable() {
        let t = PowParams::default().expected_work_time(60);
        // 2^60 / 10^6
        assert!((t / 1.152921504606847e12 - 1.0).abs() < 1e-12);
        assert!(t > 3.7e11);
    }

    #[test]
    fn underflowing_probability_never_finishes() {
        let mut rng = StreamSplitter::new(1).split();
        assert!(geometric_attempts(1100, &mut rng).is_infinite());
    }

    #[test]
    fn quotas_follow_access_share() {
        let mut mana = ManaLedger::new(ManaParams::no_decay());
        let nodes: Vec<NodeId> = (0..4).map(NodeId::simulated).collect();
        for (n, m) in nodes.iter().zip([50.0, 30.0, 20.0, 0.0]) {
            mana.credit(*n, m, 0.0, SimTime::ZERO);
        }
        let quotas: Vec<f64> = nodes.iter().map(|n| scheduler_quota(&mana, n, SimTime::ZERO, 100.0)).collect();
        assert_eq!(quotas, vec![50.0, 30.0, 20.0, 0.0]);
        assert_eq!(quotas.iter().sum::<f64>(), 100.0);
    }
}
