//! The message DAG.
//!
//! Holds attached messages, the tip set and the approver index, and owns the
//! UTXO ledger that books value payloads. Each message tracks the set of
//! issuers found in its future cone as a bitset; attaching a message pushes
//! its issuer bit up the past cone and stops wherever the bit is already set,
//! so approval weight is a popcount weighted by mana.

use std::collections::{HashMap, HashSet, VecDeque};

use fixedbitset::FixedBitSet;
use indexmap::{IndexMap, IndexSet};
use rand::seq::index;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ids::{BranchId, MessageId, NodeId, TxId};
use crate::mana::ManaView;
use crate::message::{Message, Payload, MAX_PARENTS, MIN_PARENTS};
use crate::time::SimTime;
use crate::utxo::{ApplyOutcome, BranchStatus, Reality, ResolutionReport, UtxoLedger};

pub const DEFAULT_ELIGIBILITY_AGE_SECS: f64 = 30.0;
pub const DEFAULT_CONFIRMATION_THRESHOLD: f64 = 0.5;
pub const DEFAULT_TIP_POOL_TARGET: usize = 100;
pub const ORPHAN_AGE_FACTOR: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangleParams {
    /// Maximum tip age Δ for selection.
    pub eligibility_age: SimTime,
    /// Approval weight θ at which messages confirm and conflicts resolve.
    pub confirmation_threshold: f64,
    pub tip_pool_target: usize,
}

impl Default for TangleParams {
    fn default() -> Self {
        Self {
            eligibility_age: SimTime::from_secs_f64(DEFAULT_ELIGIBILITY_AGE_SECS),
            confirmation_threshold: DEFAULT_CONFIRMATION_THRESHOLD,
            tip_pool_target: DEFAULT_TIP_POOL_TARGET,
        }
    }
}

impl TangleParams {
    pub fn orphan_age(&self) -> SimTime {
        SimTime(self.eligibility_age.0.saturating_mul(ORPHAN_AGE_FACTOR))
    }
}

/// Congestion in `[0, 1]` derived from the eligible tip pool size.
pub fn congestion_level(eligible: usize, target: usize) -> f64 {
    if target == 0 {
        return 1.0;
    }
    (eligible as f64 / target as f64).min(1.0)
}

/// Number of parents to approve: 2 when idle, up to 8 under congestion.
pub fn parent_count(congestion: f64) -> usize {
    let extra = (6.0 * congestion.clamp(0.0, 1.0)).floor() as usize;
    (MIN_PARENTS + extra).clamp(MIN_PARENTS, MAX_PARENTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PayloadOpinion {
    Like,
    Dislike,
    /// Payload carries nothing to vote on.
    NotApplicable,
}

#[derive(Debug, Clone)]
pub struct MessageMetadata {
    /// Issuing timestamp (genesis anchors: zero).
    pub attach_time: SimTime,
    /// When the message entered this view.
    pub arrival: SimTime,
    pub seq: u64,
    pub issuer: Option<NodeId>,
    pub branch: BranchId,
    pub reality: Reality,
    pub payload_tx: Option<TxId>,
    pub opinion_on_payload: PayloadOpinion,
    pub confirmation_time: Option<SimTime>,
    pub orphaned: bool,
}

impl MessageMetadata {
    pub fn is_confirmed(&self) -> bool {
        self.confirmation_time.is_some()
    }

    pub fn is_anchor(&self) -> bool {
        self.issuer.is_none()
    }
}

#[derive(Debug, Clone)]
struct Entry {
    message: Option<Message>,
    meta: MessageMetadata,
    approvers: Vec<MessageId>,
    /// Issuer indices present in the future cone.
    supporters: FixedBitSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TangleError {
    #[error("parent {0:?} is not attached")]
    UnknownParent(MessageId),
    #[error("message {0:?} is already attached")]
    Duplicate(MessageId),
    #[error("message {0:?} is unknown")]
    UnknownMessage(MessageId),
    #[error("no eligible tips")]
    NoEligibleTips,
}

/// Result of booking a message's payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attached {
    pub id: MessageId,
    pub payload: Option<ApplyOutcome>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConflictResolution {
    pub winner_message: Option<MessageId>,
    pub report: ResolutionReport,
    /// Messages whose payload was rejected by this resolution.
    pub rejected_messages: Vec<MessageId>,
    /// Messages that inherited a losing branch only through their parents.
    pub remerged_messages: Vec<MessageId>,
    pub branch_weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub confirmed: Vec<MessageId>,
    pub orphaned: Vec<MessageId>,
    pub resolutions: Vec<ConflictResolution>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TangleCounters {
    /// Tip entries examined by tip selection.
    pub tip_scan: u64,
    /// Entries touched while propagating issuer bits.
    pub support_updates: u64,
}

#[derive(Debug, Clone)]
pub struct TangleState {
    params: TangleParams,
    entries: IndexMap<MessageId, Entry>,
    tips: IndexSet<MessageId>,
    unconfirmed: IndexSet<MessageId>,
    issuers: IndexSet<NodeId>,
    ledger: UtxoLedger,
    /// Message that first carried each transaction.
    tx_carriers: HashMap<TxId, MessageId>,
    /// Conflict branches awaiting resolution, in creation order.
    pending_conflicts: IndexSet<BranchId>,
    counters: TangleCounters,
    next_seq: u64,
}

impl TangleState {
    /// A tangle holding the two genesis anchors and the given ledger.
    pub fn new(params: TangleParams, ledger: UtxoLedger) -> Self {
        let mut state = Self {
            params,
            entries: IndexMap::new(),
            tips: IndexSet::new(),
            unconfirmed: IndexSet::new(),
            issuers: IndexSet::new(),
            ledger,
            tx_carriers: HashMap::new(),
            pending_conflicts: IndexSet::new(),
            counters: TangleCounters::default(),
            next_seq: 0,
        };
        for i in 0..2 {
            let id = MessageId::genesis_anchor(i);
            let meta = MessageMetadata {
                attach_time: SimTime::ZERO,
                arrival: SimTime::ZERO,
                seq: state.bump_seq(),
                issuer: None,
                branch: BranchId::MASTER,
                reality: Reality::new(),
                payload_tx: None,
                opinion_on_payload: PayloadOpinion::NotApplicable,
                confirmation_time: Some(SimTime::ZERO),
                orphaned: false,
            };
            state.entries.insert(
                id,
                Entry {
                    message: None,
                    meta,
                    approvers: Vec::new(),
                    supporters: FixedBitSet::new(),
                },
            );
            state.tips.insert(id);
        }
        state
    }

    fn bump_seq(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq - 1
    }

    pub fn params(&self) -> &TangleParams {
        &self.params
    }

    pub fn ledger(&self) -> &UtxoLedger {
        &self.ledger
    }

    pub fn counters(&self) -> TangleCounters {
        self.counters
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &MessageId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn tips(&self) -> impl Iterator<Item = &MessageId> {
        self.tips.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &MessageId> {
        self.entries.keys()
    }

    pub fn message(&self, id: &MessageId) -> Option<&Message> {
        self.entries.get(id).and_then(|e| e.message.as_ref())
    }

    pub fn metadata(&self, id: &MessageId) -> Option<&MessageMetadata> {
        self.entries.get(id).map(|e| &e.meta)
    }

    pub fn approvers(&self, id: &MessageId) -> &[MessageId] {
        self.entries.get(id).map_or(&[], |e| e.approvers.as_slice())
    }

    pub fn parents(&self, id: &MessageId) -> &[MessageId] {
        self.message(id).map_or(&[], |m| m.parents.as_slice())
    }

    pub fn carrier_of(&self, tx: &TxId) -> Option<MessageId> {
        self.tx_carriers.get(tx).copied()
    }

    /// Issuers (other than by self-reference) found in the future cone.
    pub fn supporters(&self, id: &MessageId) -> Vec<NodeId> {
        self.entries
            .get(id)
            .map(|e| e.supporters.ones().map(|i| self.issuers[i]).collect())
            .unwrap_or_default()
    }

    fn issuer_index(&mut self, node: NodeId) -> usize {
        let (i, _) = self.issuers.insert_full(node);
        i
    }

    /// Adds a solid message to the DAG and books its payload.
    pub fn attach(&mut self, message: Message, now: SimTime) -> Result<Attached, TangleError> {
        let id = message.id();
        if self.entries.contains_key(&id) {
            return Err(TangleError::Duplicate(id));
        }
        if let Some(missing) = message.parents.iter().find(|p| !self.entries.contains_key(*p)) {
            return Err(TangleError::UnknownParent(*missing));
        }

        let mut reality = Reality::new();
        for p in &message.parents {
            reality.extend(self.entries[p].meta.reality.iter().copied());
        }
        let parents_conflict = self.ledger.is_unmergeable(&reality);

        let mut payload_tx = None;
        let mut forked = Vec::new();
        let (opinion, outcome) = match &message.payload {
            Payload::ValueTx(tx) if !parents_conflict => {
                let tx_id = tx.id();
                payload_tx = Some(tx_id);
                let outcome = self.ledger.apply_attributed(tx.clone(), now, &reality);
                let opinion = match &outcome {
                    ApplyOutcome::Valid(_) => PayloadOpinion::Like,
                    ApplyOutcome::Conflict { branch, conflict_set } => {
                        self.pending_conflicts.insert(*branch);
                        for member in conflict_set {
                            if let Some(b) = self.ledger.tx(member).and_then(|r| r.own_branch) {
                                if *member != tx_id {
                                    self.pending_conflicts.insert(b);
                                    forked.push(b);
                                }
                            }
                        }
                        if self.ledger.branch_status(branch) == Some(BranchStatus::Rejected) {
                            PayloadOpinion::Dislike
                        } else {
                            PayloadOpinion::Like
                        }
                    }
                    ApplyOutcome::Invalid(_) => PayloadOpinion::Dislike,
                };
                if opinion != PayloadOpinion::Dislike {
                    reality.extend(self.ledger.tx(&tx_id).map(|r| r.reality.clone()).unwrap_or_default());
                    self.tx_carriers.entry(tx_id).or_insert(id);
                }
                (opinion, Some(outcome))
            }
            Payload::ValueTx(tx) => {
                payload_tx = Some(tx.id());
                (PayloadOpinion::Dislike, None)
            }
            _ if parents_conflict => (PayloadOpinion::Dislike, None),
            _ => (PayloadOpinion::NotApplicable, None),
        };

        let issuer_idx = self.issuer_index(message.issuer);
        let seq = self.bump_seq();
        let meta = MessageMetadata {
            attach_time: message.timestamp,
            arrival: now,
            seq,
            issuer: Some(message.issuer),
            branch: self.ledger.branch_of(&reality),
            reality,
            payload_tx,
            opinion_on_payload: opinion,
            confirmation_time: None,
            orphaned: false,
        };
        for p in &message.parents {
            self.tips.swap_remove(p);
            self.entries[p].approvers.push(id);
        }
        let parents = message.parents.clone();
        self.entries.insert(
            id,
            Entry {
                message: Some(message),
                meta,
                approvers: Vec::new(),
                supporters: FixedBitSet::with_capacity(self.issuers.len()),
            },
        );
        self.tips.insert(id);
        self.unconfirmed.insert(id);
        self.propagate_support(&parents, issuer_idx);
        for b in forked {
            self.propagate_fork(b);
        }
        Ok(Attached { id, payload: outcome })
    }

    fn propagate_support(&mut self, parents: &[MessageId], issuer: usize) {
        let mut queue: VecDeque<MessageId> = parents.iter().copied().collect();
        while let Some(m) = queue.pop_front() {
            let entry = &mut self.entries[&m];
            self.counters.support_updates += 1;
            if entry.supporters.contains(issuer) {
                continue;
            }
            entry.supporters.grow(issuer + 1);
            entry.supporters.insert(issuer);
            if let Some(msg) = &entry.message {
                queue.extend(msg.parents.iter().copied());
            }
        }
    }

    /// A transaction already in the DAG was moved into a new conflict branch:
    /// every message carrying a transaction of that reality, and their future
    /// cones, join the branch.
    fn propagate_fork(&mut self, branch: BranchId) {
        let carriers: Vec<MessageId> = self
            .ledger
            .txs()
            .filter(|(_, r)| r.reality.contains(&branch))
            .filter_map(|(t, _)| self.tx_carriers.get(t).copied())
            .collect();
        let mut queue: VecDeque<MessageId> = carriers.into();
        let mut seen = HashSet::new();
        while let Some(m) = queue.pop_front() {
            if !seen.insert(m) {
                continue;
            }
            let entry = &mut self.entries[&m];
            entry.meta.reality.insert(branch);
            queue.extend(entry.approvers.iter().copied());
        }
        for m in seen {
            let branch = self.ledger.branch_of(&self.entries[&m].meta.reality);
            self.entries[&m].meta.branch = branch;
        }
    }

    fn is_eligible(&self, entry: &Entry, now: SimTime, disliked: &HashSet<BranchId>) -> bool {
        let meta = &entry.meta;
        if meta.orphaned || meta.opinion_on_payload == PayloadOpinion::Dislike {
            return false;
        }
        if !meta.is_anchor() && now.saturating_sub(meta.attach_time) > self.params.eligibility_age {
            return false;
        }
        meta.reality.iter().all(|b| {
            !disliked.contains(b) && self.ledger.branch_status(b) != Some(BranchStatus::Rejected)
        })
    }

    /// Tips a node that dislikes `disliked` may approve at `now`: young enough,
    /// not in a rejected or disliked branch, payload liked or neutral.
    pub fn eligible_tips(&mut self, now: SimTime, disliked: &HashSet<BranchId>) -> Vec<MessageId> {
        self.counters.tip_scan += self.tips.len() as u64;
        self.tips
            .iter()
            .filter(|t| self.is_eligible(&self.entries[*t], now, disliked))
            .copied()
            .collect()
    }

    /// Uniform choice of `parent_count(congestion)` distinct tips from the
    /// eligible pool. A smaller pool is taken whole; a pool of one is padded
    /// with that tip's first parent so the two-parent minimum holds with
    /// distinct parents.
    pub fn select_from<R: Rng + ?Sized>(
        &self,
        eligible: &[MessageId],
        congestion: f64,
        rng: &mut R,
    ) -> Result<Vec<MessageId>, TangleError> {
        let wanted = parent_count(congestion);
        match eligible.len() {
            0 => Err(TangleError::NoEligibleTips),
            1 => {
                let tip = eligible[0];
                let pad = match self.message(&tip) {
                    Some(m) => m.parents[0],
                    None => {
                        let other = if tip == MessageId::genesis_anchor(0) { 1 } else { 0 };
                        MessageId::genesis_anchor(other)
                    }
                };
                Ok(vec![tip, pad])
            }
            n if n <= wanted => Ok(eligible.to_vec()),
            n => Ok(index::sample(rng, n, wanted).into_iter().map(|i| eligible[i]).collect()),
        }
    }

    pub fn select_tips<R: Rng + ?Sized>(
        &mut self,
        now: SimTime,
        congestion: f64,
        disliked: &HashSet<BranchId>,
        rng: &mut R,
    ) -> Result<Vec<MessageId>, TangleError> {
        let eligible = self.eligible_tips(now, disliked);
        self.select_from(&eligible, congestion, rng)
    }

    fn weight_of(&self, set: &FixedBitSet, view: &dyn ManaView) -> f64 {
        let total = view.total();
        if total <= 0.0 {
            return 0.0;
        }
        set.ones().map(|i| view.weight(&self.issuers[i])).sum::<f64>() / total
    }

    /// Fraction of total consensus mana held by issuers referencing `id`
    /// directly or indirectly.
    pub fn approval_weight(&self, id: &MessageId, view: &dyn ManaView) -> Result<f64, TangleError> {
        let entry = self.entries.get(id).ok_or(TangleError::UnknownMessage(*id))?;
        Ok(self.weight_of(&entry.supporters, view))
    }

    /// Weight behind a conflict branch: supporters of the message carrying its
    /// transaction who do not also support a competing branch.
    pub fn branch_weight(&self, branch: &BranchId, view: &dyn ManaView) -> f64 {
        let Some(carrier) = self
            .ledger
            .branch(branch)
            .and_then(|b| b.tx)
            .and_then(|tx| self.tx_carriers.get(&tx))
        else {
            return 0.0;
        };
        let mut support = self.entries[carrier].supporters.clone();
        for sibling in self.ledger.siblings(branch) {
            let other = self
                .ledger
                .branch(&sibling)
                .and_then(|b| b.tx)
                .and_then(|tx| self.tx_carriers.get(&tx));
            if let Some(other) = other {
                let mut theirs = self.entries[other].supporters.clone();
                theirs.grow(support.len());
                support.grow(theirs.len());
                support.difference_with(&theirs);
            }
        }
        self.weight_of(&support, view)
    }

    /// Resolves conflicts whose branch reached the threshold, confirms
    /// messages whose approval weight reached it, and marks stale
    /// unreferenced messages as orphans.
    pub fn confirmation_sweep(&mut self, now: SimTime, view: &dyn ManaView) -> SweepReport {
        let mut report = SweepReport::default();
        let theta = self.params.confirmation_threshold;

        let pending: Vec<BranchId> = self.pending_conflicts.iter().copied().collect();
        for branch in pending {
            if self.ledger.branch_status(&branch) != Some(BranchStatus::Pending) {
                self.pending_conflicts.shift_remove(&branch);
                continue;
            }
            let weight = self.branch_weight(&branch, view);
            if weight >= theta {
                if let Ok(resolution) = self.ledger.resolve_branches(branch) {
                    report.resolutions.push(self.apply_resolution(resolution, weight));
                }
                self.pending_conflicts.shift_remove(&branch);
            }
        }

        let candidates: Vec<MessageId> = self.unconfirmed.iter().copied().collect();
        for id in candidates {
            let entry = &self.entries[&id];
            if entry.meta.opinion_on_payload == PayloadOpinion::Dislike
                || self.ledger.reality_status(&entry.meta.reality) != BranchStatus::Confirmed
            {
                continue;
            }
            if self.weight_of(&entry.supporters, view) >= theta {
                self.entries[&id].meta.confirmation_time = Some(now);
                self.unconfirmed.shift_remove(&id);
                report.confirmed.push(id);
            }
        }

        let orphan_age = self.params.orphan_age();
        let stale: Vec<MessageId> = self
            .tips
            .iter()
            .filter(|t| {
                let meta = &self.entries[*t].meta;
                !meta.is_anchor() && !meta.is_confirmed() && now.saturating_sub(meta.attach_time) > orphan_age
            })
            .copied()
            .collect();
        for id in stale {
            self.entries[&id].meta.orphaned = true;
            self.tips.swap_remove(&id);
            self.unconfirmed.shift_remove(&id);
            report.orphaned.push(id);
        }
        report
    }

    fn apply_resolution(&mut self, report: ResolutionReport, weight: f64) -> ConflictResolution {
        let rejected: HashSet<BranchId> = report.rejected_branches.iter().copied().collect();
        let mut resolution = ConflictResolution {
            winner_message: report.winner.and_then(|t| self.tx_carriers.get(&t).copied()),
            branch_weight: weight,
            ..Default::default()
        };
        let ids: Vec<MessageId> = self
            .entries
            .iter()
            .filter(|(_, e)| e.meta.reality.iter().any(|b| rejected.contains(b)))
            .map(|(id, _)| *id)
            .collect();
        for id in ids {
            let payload_rejected = self.entries[&id]
                .meta
                .payload_tx
                .is_some_and(|t| self.ledger.is_tx_rejected(&t));
            let meta = &mut self.entries[&id].meta;
            if payload_rejected {
                if meta.opinion_on_payload != PayloadOpinion::Dislike {
                    meta.opinion_on_payload = PayloadOpinion::Dislike;
                    self.unconfirmed.shift_remove(&id);
                    resolution.rejected_messages.push(id);
                }
            } else {
                meta.reality.retain(|b| !rejected.contains(b));
                let reality = meta.reality.clone();
                self.entries[&id].meta.branch = self.ledger.branch_of(&reality);
                resolution.remerged_messages.push(id);
            }
        }
        resolution.report = report;
        resolution
    }

    /// Messages that were never confirmed nor orphaned.
    pub fn unconfirmed(&self) -> impl Iterator<Item = &MessageId> {
        self.unconfirmed.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mana::ManaSnapshot;
    use crate::message::Payload;
    use crate::rng::StreamSplitter;

    fn anchors() -> Vec<MessageId> {
        vec![MessageId::genesis_anchor(0), MessageId::genesis_anchor(1)]
    }

    fn tangle() -> TangleState {
        TangleState::new(TangleParams::default(), UtxoLedger::new(&[]))
    }

    fn data(issuer: usize, parents: Vec<MessageId>, t: f64, tag: u8) -> Message {
        Message::build_and_sign(
            NodeId::simulated(issuer),
            parents,
            Payload::Data(vec![tag]),
            SimTime::from_secs_f64(t),
            0,
        )
        .unwrap()
    }

    fn equal_mana(n: usize) -> ManaSnapshot {
        ManaSnapshot::from_pairs((0..n).map(|i| (NodeId::simulated(i), 1.0)))
    }

    #[test]
    fn attach_to_genesis_replaces_tips() {
        let mut t = tangle();
        let m = data(0, anchors(), 0.0, 0);
        let id = t.attach(m, SimTime::ZERO).unwrap().id;
        assert_eq!(t.tips().copied().collect::<Vec<_>>(), vec![id]);
        assert_eq!(t.approvers(&anchors()[0]), &[id]);
    }

    #[test]
    fn disjoint_parents_widen_the_dag() {
        let mut t = tangle();
        let a = t.attach(data(0, anchors(), 0.0, 0), SimTime::ZERO).unwrap().id;
        let b = t.attach(data(1, anchors(), 0.0, 1), SimTime::ZERO).unwrap().id;
        let c = t.attach(data(2, anchors(), 0.0, 2), SimTime::ZERO).unwrap().id;
        let d = t.attach(data(3, vec![a, b], 0.0, 3), SimTime::ZERO).unwrap().id;
        let e = t.attach(data(4, anchors(), 0.0, 4), SimTime::ZERO).unwrap().id;
        let f = t.attach(data(5, vec![c, e], 0.0, 5), SimTime::ZERO).unwrap().id;
        let tips: HashSet<_> = t.tips().copied().collect();
        assert_eq!(tips, HashSet::from([d, f]));
    }

    #[test]
    fn unknown_parent_is_refused() {
        let mut t = tangle();
        let ghost = MessageId([9; 32]);
        let m = data(0, vec![anchors()[0], ghost], 0.0, 0);
        assert_eq!(t.attach(m, SimTime::ZERO), Err(TangleError::UnknownParent(ghost)));
    }

    #[test]
    fn duplicate_is_refused() {
        let mut t = tangle();
        let m = data(0, anchors(), 0.0, 0);
        let id = t.attach(m.clone(), SimTime::ZERO).unwrap().id;
        assert_eq!(t.attach(m, SimTime::ZERO), Err(TangleError::Duplicate(id)));
    }

    #[test]
    fn parent_count_schedule() {
        assert_eq!(parent_count(0.0), 2);
        assert_eq!(parent_count(0.5), 5);
        assert_eq!(parent_count(1.0), 8);
        assert_eq!(parent_count(congestion_level(500, 100)), 8);
        assert_eq!(congestion_level(10, 100), 0.1);
    }

    #[test]
    fn genesis_bootstrap_returns_both_anchors() {
        let mut t = tangle();
        let mut rng = StreamSplitter::new(0).split();
        let mut picked = t.select_tips(SimTime::ZERO, 0.0, &HashSet::new(), &mut rng).unwrap();
        picked.sort();
        let mut expected = anchors();
        expected.sort();
        assert_eq!(picked, expected);
    }

    #[test]
    fn single_eligible_tip_is_padded_with_its_parent() {
        let mut t = tangle();
        let a = t.attach(data(0, anchors(), 0.0, 0), SimTime::ZERO).unwrap().id;
        let mut rng = StreamSplitter::new(0).split();
        let picked = t.select_tips(SimTime::ZERO, 0.0, &HashSet::new(), &mut rng).unwrap();
        assert_eq!(picked, vec![a, anchors()[0]]);
    }

    #[test]
    fn stale_tips_are_not_eligible() {
        let mut t = tangle();
        t.attach(data(0, anchors(), 0.0, 0), SimTime::ZERO).unwrap();
        let mut rng = StreamSplitter::new(0).split();
        let late = SimTime::from_secs_f64(31.0);
        assert_eq!(
            t.select_tips(late, 0.0, &HashSet::new(), &mut rng),
            Err(TangleError::NoEligibleTips)
        );
    }

    #[test]
    fn fresh_tip_has_zero_weight() {
        let mut t = tangle();
        let a = t.attach(data(0, anchors(), 0.0, 0), SimTime::ZERO).unwrap().id;
        assert_eq!(t.approval_weight(&a, &equal_mana(3)).unwrap(), 0.0);
        assert_eq!(
            t.approval_weight(&MessageId([1; 32]), &equal_mana(3)),
            Err(TangleError::UnknownMessage(MessageId([1; 32])))
        );
    }

    #[test]
    fn full_coverage_gives_unit_weight() {
        let mut t = tangle();
        let a = t.attach(data(0, anchors(), 0.0, 0), SimTime::ZERO).unwrap().id;
        let b = t.attach(data(1, vec![a, anchors()[0]], 0.0, 1), SimTime::ZERO).unwrap().id;
        let c = t.attach(data(2, vec![b, anchors()[1]], 0.0, 2), SimTime::ZERO).unwrap().id;
        t.attach(data(0, vec![c, a], 0.0, 3), SimTime::ZERO).unwrap();
        assert_eq!(t.approval_weight(&a, &equal_mana(3)).unwrap(), 1.0);
    }

    #[test]
    fn threshold_confirmation_with_uneven_mana() {
        // Shares {0.3, 0.3, 0.4}; θ = 0.5.
        let view = ManaSnapshot::from_pairs([
            (NodeId::simulated(0), 0.3),
            (NodeId::simulated(1), 0.3),
            (NodeId::simulated(2), 0.4),
        ]);
        let mut t = tangle();
        let m = t.attach(data(2, anchors(), 0.0, 0), SimTime::ZERO).unwrap().id;
        let r1 = t.attach(data(0, vec![m, anchors()[0]], 0.0, 1), SimTime::ZERO).unwrap().id;
        let w = t.approval_weight(&m, &view).unwrap();
        assert!((w - 0.3).abs() < 1e-12);
        let sweep = t.confirmation_sweep(SimTime::from_secs_f64(1.0), &view);
        assert!(!sweep.confirmed.contains(&m));
        t.attach(data(1, vec![r1, anchors()[1]], 0.0, 2), SimTime::ZERO).unwrap();
        let w = t.approval_weight(&m, &view).unwrap();
        assert!((w - 0.6).abs() < 1e-12);
        let sweep = t.confirmation_sweep(SimTime::from_secs_f64(2.0), &view);
        assert!(sweep.confirmed.contains(&m));
        assert_eq!(t.metadata(&m).unwrap().confirmation_time, Some(SimTime::from_secs_f64(2.0)));
    }

    #[test]
    fn single_issuer_confirms_own_referenced_messages() {
        let view = ManaSnapshot::from_pairs([(NodeId::simulated(0), 10.0)]);
        let mut t = tangle();
        let a = t.attach(data(0, anchors(), 0.0, 0), SimTime::ZERO).unwrap().id;
        assert_eq!(t.approval_weight(&a, &view).unwrap(), 0.0);
        t.attach(data(0, vec![a, anchors()[0]], 0.0, 1), SimTime::ZERO).unwrap();
        assert_eq!(t.approval_weight(&a, &view).unwrap(), 1.0);
        assert!(t.confirmation_sweep(SimTime::ZERO, &view).confirmed.contains(&a));
    }

    #[test]
    fn unreferenced_message_is_orphaned_after_ten_eligibility_ages() {
        let view = equal_mana(2);
        let mut t = tangle();
        let a = t.attach(data(0, anchors(), 0.0, 0), SimTime::ZERO).unwrap().id;
        assert!(t.confirmation_sweep(SimTime::from_secs_f64(300.0), &view).orphaned.is_empty());
        let sweep = t.confirmation_sweep(SimTime::from_secs_f64(300.5), &view);
        assert_eq!(sweep.orphaned, vec![a]);
        assert!(t.metadata(&a).unwrap().orphaned);
        assert!(!t.tips().any(|x| *x == a));
    }
}
