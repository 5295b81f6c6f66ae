//! Access and consensus mana with lazy half-life decay.

use indexmap::IndexMap;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::time::SimTime;
use crate::transaction::Transaction;

pub const DEFAULT_HALF_LIFE_SECS: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ManaKind {
    Access,
    Consensus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManaParams {
    /// Half-life in sim-seconds; `None` disables decay.
    pub half_life: Option<f64>,
}

impl Default for ManaParams {
    fn default() -> Self {
        Self {
            half_life: Some(DEFAULT_HALF_LIFE_SECS),
        }
    }
}

impl ManaParams {
    pub fn no_decay() -> Self {
        Self { half_life: None }
    }

    fn factor(&self, elapsed: SimTime) -> f64 {
        match self.half_life {
            None => 1.0,
            Some(h) => (-(elapsed.as_secs_f64()) / h).exp2(),
        }
    }
}

/// Stored mana of one node, valid as of `last_update`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ManaRecord {
    pub access: f64,
    pub consensus: f64,
    pub last_update: SimTime,
}

impl ManaRecord {
    fn get(&self, kind: ManaKind) -> f64 {
        match kind {
            ManaKind::Access => self.access,
            ManaKind::Consensus => self.consensus,
        }
    }
}

/// Read access to per-node weights, e.g. consensus mana at some instant.
pub trait ManaView {
    fn weight(&self, node: &NodeId) -> f64;
    fn total(&self) -> f64;
}

/// Frozen per-node values of one mana kind.
#[derive(Debug, Clone, Default)]
pub struct ManaSnapshot {
    weights: IndexMap<NodeId, f64>,
    total: f64,
}

impl ManaSnapshot {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, f64)>) -> Self {
        let weights: IndexMap<NodeId, f64> = pairs.into_iter().collect();
        let total = weights.values().sum();
        Self { weights, total }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &f64)> {
        self.weights.iter()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_pairs(self.weights.iter().map(|(n, w)| (*n, w * factor)))
    }
}

impl ManaView for ManaSnapshot {
    fn weight(&self, node: &NodeId) -> f64 {
        self.weights.get(node).copied().unwrap_or(0.0)
    }

    fn total(&self) -> f64 {
        self.total
    }
}

#[derive(Debug, Clone, Default)]
pub struct ManaLedger {
    params: ManaParams,
    records: IndexMap<NodeId, ManaRecord>,
}

impl ManaLedger {
    pub fn new(params: ManaParams) -> Self {
        Self {
            params,
            records: IndexMap::new(),
        }
    }

    pub fn params(&self) -> ManaParams {
        self.params
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.records.keys()
    }

    pub fn record(&self, node: &NodeId) -> Option<&ManaRecord> {
        self.records.get(node)
    }

    /// Registers `node` with zero mana if it is not known yet.
    pub fn register(&mut self, node: NodeId, now: SimTime) {
        self.records.entry(node).or_insert(ManaRecord {
            last_update: now,
            ..Default::default()
        });
    }

    /// Brings a record current, then adds the given amounts.
    pub fn credit(&mut self, node: NodeId, access: f64, consensus: f64, now: SimTime) {
        let params = self.params;
        let record = self.records.entry(node).or_insert(ManaRecord {
            last_update: now,
            ..Default::default()
        });
        let f = params.factor(now.saturating_sub(record.last_update));
        record.access = record.access * f + access;
        record.consensus = record.consensus * f + consensus;
        record.last_update = record.last_update.max(now);
    }

    /// Pledges the moved token amount as access mana to the access target and
    /// as consensus mana to the consensus target.
    pub fn pledge_on_transaction(&mut self, tx: &Transaction, now: SimTime) {
        let moved = tx.output_total() as f64;
        self.credit(tx.access_pledge, moved, 0.0, now);
        self.credit(tx.consensus_pledge, 0.0, moved, now);
    }

    pub fn decayed_mana(&self, node: &NodeId, kind: ManaKind, now: SimTime) -> f64 {
        self.records.get(node).map_or(0.0, |r| {
            r.get(kind) * self.params.factor(now.saturating_sub(r.last_update))
        })
    }

    pub fn total(&self, kind: ManaKind, now: SimTime) -> f64 {
        self.records.keys().map(|n| self.decayed_mana(n, kind, now)).sum()
    }

    /// Fraction of the total held by `node`; 1/N when nobody holds any.
    pub fn mana_share(&self, node: &NodeId, kind: ManaKind, now: SimTime) -> f64 {
        let total = self.total(kind, now);
        if total > 0.0 {
            self.decayed_mana(node, kind, now) / total
        } else if self.records.contains_key(node) {
            1.0 / self.records.len() as f64
        } else {
            0.0
        }
    }

    pub fn snapshot(&self, kind: ManaKind, now: SimTime) -> ManaSnapshot {
        ManaSnapshot::from_pairs(self.records.keys().map(|n| (*n, self.decayed_mana(n, kind, now))))
    }

    pub fn consensus_sampler(&self, now: SimTime) -> ManaSampler {
        ManaSampler::new(self.records.keys().map(|n| (*n, self.decayed_mana(n, ManaKind::Consensus, now))))
    }

    pub fn sample_by_consensus_mana<R: Rng + ?Sized>(&self, rng: &mut R, now: SimTime) -> NodeId {
        self.consensus_sampler(now).sample(rng)
    }
}

/// Draws nodes with probability proportional to their weight, uniformly when
/// every weight is zero.
#[derive(Debug, Clone)]
pub struct ManaSampler {
    nodes: Vec<NodeId>,
    index: Option<WeightedIndex<f64>>,
}

impl ManaSampler {
    pub fn new(pairs: impl IntoIterator<Item = (NodeId, f64)>) -> Self {
        let (nodes, weights): (Vec<NodeId>, Vec<f64>) = pairs.into_iter().unzip();
        assert!(!nodes.is_empty(), "sampler needs at least one node");
        let index = WeightedIndex::new(&weights).ok();
        Self { nodes, index }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        let i = match &self.index {
            Some(index) => index.sample(rng),
            None => rng.random_range(0..self.nodes.len()),
        };
        self.nodes[i]
    }
}
