//! UTXO ledger with reality-based branch management.
//!
//! Every booked transaction lives in a *reality*: the set of conflict branches
//! it depends on, closed under branch ancestry. The empty reality is the
//! master branch. A double spend moves every transaction consuming the
//! contested output into its own conflict branch; the branches of one
//! conflict set are siblings and can never be merged.
//!
//! Besides the reality derived from its inputs, a transaction can carry an
//! *attributed* reality it inherited from message ancestry. Resolution rejects
//! transactions whose inputs depend on a losing branch, while transactions
//! that were only attributed to one are re-merged.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::hash::content_hash_parts;
use crate::ids::{Address, BranchId, TxId};
use crate::time::SimTime;
use crate::transaction::{Output, OutputRef, ShapeError, Transaction};

/// Ancestor-closed set of conflict branches. Empty means master.
pub type Reality = BTreeSet<BranchId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BranchStatus {
    Pending,
    Confirmed,
    Rejected,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub id: BranchId,
    /// Reality the branch was forked from (closed).
    pub parents: Reality,
    /// Outputs whose double spend created this branch.
    pub conflicts: BTreeSet<OutputRef>,
    /// The transaction owning the branch; `None` for master.
    pub tx: Option<TxId>,
    pub status: BranchStatus,
}

#[derive(Debug, Clone)]
pub struct TxRecord {
    pub tx: Transaction,
    pub arrival: SimTime,
    /// Reality implied by the inputs, including the own branch if any.
    pub reality: Reality,
    /// Extra branches inherited through message ancestry only.
    pub attributed: Reality,
    pub own_branch: Option<BranchId>,
}

#[derive(Debug, Clone, Copy)]
struct OutputRecord {
    output: Output,
    creator: TxId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidReason {
    #[error("malformed transaction: {0}")]
    Shape(#[from] ShapeError),
    #[error("transaction already booked")]
    AlreadyBooked,
    #[error("input {0:?} does not exist")]
    UnknownInput(OutputRef),
    #[error("inputs sum to {inputs}, outputs to {outputs}")]
    BalanceMismatch { inputs: u128, outputs: u128 },
    #[error("input {0:?} already spent within the transaction's own reality")]
    AlreadySpent(OutputRef),
    #[error("inputs come from conflicting realities")]
    UnmergeableRealities,
    #[error("an input belongs to a rejected reality")]
    InputRejected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApplyOutcome {
    Valid(BranchId),
    /// The transaction was booked into its own branch; `conflict_set` lists
    /// every transaction consuming one of its contested inputs, in arrival
    /// order, including itself.
    Conflict {
        branch: BranchId,
        conflict_set: Vec<TxId>,
    },
    Invalid(InvalidReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("branch {0:?} is unknown")]
    UnknownBranch(BranchId),
    #[error("branch {0:?} is not pending")]
    WinnerNotPending(BranchId),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ResolutionReport {
    pub winner: Option<TxId>,
    pub confirmed_branches: Vec<BranchId>,
    pub rejected_branches: Vec<BranchId>,
    /// Transactions rejected by this resolution: the losing double spends and
    /// everything spending their outputs.
    pub rejected_txs: Vec<TxId>,
    /// Transactions that only inherited a losing branch through attribution.
    pub remerged_txs: Vec<TxId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditViolation {
    #[error("master branch missing or not confirmed")]
    Master,
    #[error("conflict on {0:?} has more than one confirmed member")]
    Exclusivity(OutputRef),
    #[error("a confirmed reality consumes {0:?} twice")]
    DoubleSpend(OutputRef),
    #[error("a confirmed transaction spends missing output {0:?}")]
    Dangling(OutputRef),
    #[error("confirmed supply {found} differs from genesis supply {expected}")]
    Conservation { expected: u128, found: u128 },
}

/// Ledger operation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LedgerCounters {
    /// Output / creator record lookups performed by `apply_transaction`.
    pub lookups: u64,
}

#[derive(Debug, Clone)]
pub struct UtxoLedger {
    genesis_supply: u128,
    genesis_len: u16,
    outputs: HashMap<OutputRef, OutputRecord>,
    consumers: HashMap<OutputRef, Vec<TxId>>,
    spent_by_tx: HashMap<TxId, Vec<TxId>>,
    txs: IndexMap<TxId, TxRecord>,
    branches: IndexMap<BranchId, Branch>,
    counters: LedgerCounters,
}

impl UtxoLedger {
    /// Creates a ledger whose genesis outputs are `genesis[i]` at
    /// `OutputRef::genesis(i)`.
    pub fn new(genesis: &[Output]) -> Self {
        assert!(genesis.len() <= u16::MAX as usize, "too many genesis outputs");
        let mut outputs = HashMap::with_capacity(genesis.len());
        for (i, output) in genesis.iter().enumerate() {
            outputs.insert(
                OutputRef::genesis(i as u16),
                OutputRecord {
                    output: *output,
                    creator: TxId::GENESIS,
                },
            );
        }
        let mut branches = IndexMap::new();
        branches.insert(
            BranchId::MASTER,
            Branch {
                id: BranchId::MASTER,
                parents: Reality::new(),
                conflicts: BTreeSet::new(),
                tx: None,
                status: BranchStatus::Confirmed,
            },
        );
        Self {
            genesis_supply: genesis.iter().map(|o| o.amount as u128).sum(),
            genesis_len: genesis.len() as u16,
            outputs,
            consumers: HashMap::new(),
            spent_by_tx: HashMap::new(),
            txs: IndexMap::new(),
            branches,
            counters: LedgerCounters::default(),
        }
    }

    pub fn genesis_supply(&self) -> u128 {
        self.genesis_supply
    }

    pub fn counters(&self) -> LedgerCounters {
        self.counters
    }

    pub fn output(&self, out: &OutputRef) -> Option<&Output> {
        self.outputs.get(out).map(|r| &r.output)
    }

    pub fn tx(&self, id: &TxId) -> Option<&TxRecord> {
        self.txs.get(id)
    }

    pub fn txs(&self) -> impl Iterator<Item = (&TxId, &TxRecord)> {
        self.txs.iter()
    }

    pub fn branch(&self, id: &BranchId) -> Option<&Branch> {
        self.branches.get(id)
    }

    pub fn branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.values()
    }

    pub fn branch_status(&self, id: &BranchId) -> Option<BranchStatus> {
        self.branches.get(id).map(|b| b.status)
    }

    /// All transactions that ever consumed `out`, in arrival order.
    pub fn conflict_set(&self, out: &OutputRef) -> Vec<TxId> {
        self.consumers.get(out).cloned().unwrap_or_default()
    }

    /// Branch the transaction currently sits in, attribution included.
    pub fn tx_branch(&self, id: &TxId) -> Option<BranchId> {
        let record = self.txs.get(id)?;
        if let Some(own) = record.own_branch {
            if record.attributed.is_empty() {
                return Some(own);
            }
        }
        let combined: Reality = record.reality.union(&record.attributed).copied().collect();
        Some(self.branch_of(&combined))
    }

    /// Collapses a reality to a single branch id: master when empty, the sole
    /// maximal branch when there is one, otherwise an aggregated id.
    pub fn branch_of(&self, reality: &Reality) -> BranchId {
        let maximal: Vec<&BranchId> = reality
            .iter()
            .filter(|b| {
                !reality
                    .iter()
                    .any(|o| o != *b && self.branches.get(o).is_some_and(|br| br.parents.contains(b)))
            })
            .collect();
        match maximal.as_slice() {
            [] => BranchId::MASTER,
            [only] => **only,
            many => {
                let mut parts: Vec<&[u8]> = vec![b"aggregated"];
                parts.extend(many.iter().map(|b| b.as_bytes().as_slice()));
                BranchId(content_hash_parts(&parts))
            }
        }
    }

    pub fn reality_status(&self, reality: &Reality) -> BranchStatus {
        let mut all_confirmed = true;
        for b in reality {
            match self.branch_status(b) {
                Some(BranchStatus::Rejected) => return BranchStatus::Rejected,
                Some(BranchStatus::Confirmed) => {}
                _ => all_confirmed = false,
            }
        }
        if all_confirmed {
            BranchStatus::Confirmed
        } else {
            BranchStatus::Pending
        }
    }

    pub fn is_tx_rejected(&self, id: &TxId) -> bool {
        self.txs
            .get(id)
            .is_some_and(|r| self.reality_status(&r.reality) == BranchStatus::Rejected)
    }

    /// Branches that compete with `branch` in at least one conflict set.
    pub fn siblings(&self, branch: &BranchId) -> Vec<BranchId> {
        let Some(b) = self.branches.get(branch) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for conflict in &b.conflicts {
            for tx in self.consumers.get(conflict).into_iter().flatten() {
                if let Some(own) = self.txs.get(tx).and_then(|r| r.own_branch) {
                    if own != *branch && !out.contains(&own) {
                        out.push(own);
                    }
                }
            }
        }
        out
    }

    /// True when the reality contains two sibling branches.
    pub fn is_unmergeable(&self, reality: &Reality) -> bool {
        reality
            .iter()
            .any(|b| self.siblings(b).iter().any(|s| reality.contains(s)))
    }

    /// Closure of a set of branches under ancestry.
    pub fn close(&self, branches: impl IntoIterator<Item = BranchId>) -> Reality {
        let mut out = Reality::new();
        for b in branches {
            if b == BranchId::MASTER {
                continue;
            }
            if let Some(branch) = self.branches.get(&b) {
                out.extend(branch.parents.iter().copied());
            }
            out.insert(b);
        }
        out
    }

    pub fn apply_transaction(&mut self, tx: Transaction, arrival: SimTime) -> ApplyOutcome {
        self.apply_attributed(tx, arrival, &Reality::new())
    }

    /// Books `tx`, additionally attributing it to `attributed` (the reality of
    /// the message that carries it).
    pub fn apply_attributed(&mut self, tx: Transaction, arrival: SimTime, attributed: &Reality) -> ApplyOutcome {
        match self.book(tx, arrival, attributed) {
            Ok(outcome) => outcome,
            Err(reason) => ApplyOutcome::Invalid(reason),
        }
    }

    fn book(&mut self, tx: Transaction, arrival: SimTime, attributed: &Reality) -> Result<ApplyOutcome, InvalidReason> {
        tx.check_shape()?;
        let id = tx.id();
        if self.txs.contains_key(&id) {
            return Err(InvalidReason::AlreadyBooked);
        }

        let mut input_sum: u128 = 0;
        let mut reality = Reality::new();
        for input in &tx.inputs {
            self.counters.lookups += 1;
            let record = self.outputs.get(input).ok_or(InvalidReason::UnknownInput(*input))?;
            input_sum += record.output.amount as u128;
            if record.creator != TxId::GENESIS {
                self.counters.lookups += 1;
                reality.extend(self.txs[&record.creator].reality.iter().copied());
            }
        }
        let output_sum = tx.output_total();
        if input_sum != output_sum {
            return Err(InvalidReason::BalanceMismatch {
                inputs: input_sum,
                outputs: output_sum,
            });
        }
        if self.reality_status(&reality) == BranchStatus::Rejected {
            return Err(InvalidReason::InputRejected);
        }
        let attributed: Reality = attributed
            .iter()
            .filter(|b| self.branch_status(b) != Some(BranchStatus::Rejected))
            .copied()
            .collect();
        let combined: Reality = reality.union(&attributed).copied().collect();
        if self.is_unmergeable(&combined) {
            return Err(InvalidReason::UnmergeableRealities);
        }

        let contested: Vec<OutputRef> = tx
            .inputs
            .iter()
            .filter(|i| self.consumers.get(i).is_some_and(|c| !c.is_empty()))
            .copied()
            .collect();

        if contested.is_empty() {
            let branch = self.branch_of(&combined);
            self.insert_tx(id, tx, arrival, reality, attributed, None);
            return Ok(ApplyOutcome::Valid(branch));
        }

        // A consumer we descend from means the input is already spent in our
        // own reality.
        let ancestry = self.ancestry(&tx);
        for input in &contested {
            if self.consumers[input].iter().any(|c| ancestry.contains(c)) {
                return Err(InvalidReason::AlreadySpent(*input));
            }
        }

        for input in &contested {
            for consumer in self.consumers[input].clone() {
                self.fork(consumer, *input);
            }
        }
        // Forking may have extended the realities of our inputs.
        let mut reality = Reality::new();
        for input in &tx.inputs {
            let creator = self.outputs[input].creator;
            if creator != TxId::GENESIS {
                reality.extend(self.txs[&creator].reality.iter().copied());
            }
        }

        let already_decided = contested.iter().any(|input| {
            self.consumers[input].iter().any(|c| {
                self.txs[c]
                    .own_branch
                    .is_some_and(|b| self.branches[&b].status == BranchStatus::Confirmed)
            })
        });
        let branch_id = BranchId::conflict(&id);
        self.branches.insert(
            branch_id,
            Branch {
                id: branch_id,
                parents: reality.clone(),
                conflicts: contested.iter().copied().collect(),
                tx: Some(id),
                status: if already_decided {
                    BranchStatus::Rejected
                } else {
                    BranchStatus::Pending
                },
            },
        );
        reality.insert(branch_id);
        self.insert_tx(id, tx, arrival, reality, attributed, Some(branch_id));

        let mut conflict_set: Vec<TxId> = Vec::new();
        for input in &contested {
            for c in &self.consumers[input] {
                if !conflict_set.contains(c) {
                    conflict_set.push(*c);
                }
            }
        }
        conflict_set.sort_by_key(|c| self.txs.get_index_of(c));
        Ok(ApplyOutcome::Conflict {
            branch: branch_id,
            conflict_set,
        })
    }

    fn insert_tx(
        &mut self,
        id: TxId,
        tx: Transaction,
        arrival: SimTime,
        reality: Reality,
        attributed: Reality,
        own_branch: Option<BranchId>,
    ) {
        for input in &tx.inputs {
            self.consumers.entry(*input).or_default().push(id);
            let creator = self.outputs[input].creator;
            self.spent_by_tx.entry(creator).or_default().push(id);
        }
        for (i, output) in tx.outputs.iter().enumerate() {
            self.outputs.insert(
                OutputRef::new(id, i as u16),
                OutputRecord {
                    output: *output,
                    creator: id,
                },
            );
        }
        let attributed = attributed.difference(&reality).copied().collect();
        self.txs.insert(
            id,
            TxRecord {
                tx,
                arrival,
                reality,
                attributed,
                own_branch,
            },
        );
    }

    /// Transactions whose outputs `tx` consumes, transitively.
    fn ancestry(&self, tx: &Transaction) -> HashSet<TxId> {
        let mut seen = HashSet::new();
        let mut queue: VecDeque<TxId> = tx
            .inputs
            .iter()
            .map(|i| self.outputs[i].creator)
            .filter(|c| *c != TxId::GENESIS)
            .collect();
        while let Some(t) = queue.pop_front() {
            if !seen.insert(t) {
                continue;
            }
            for input in &self.txs[&t].tx.inputs {
                let creator = self.outputs[input].creator;
                if creator != TxId::GENESIS {
                    queue.push_back(creator);
                }
            }
        }
        seen
    }

    /// Moves `tx` into its own conflict branch (if not already there) and adds
    /// the branch to every transaction spending its outputs.
    fn fork(&mut self, tx: TxId, contested: OutputRef) {
        if let Some(own) = self.txs[&tx].own_branch {
            self.branches[&own].conflicts.insert(contested);
            return;
        }
        let branch_id = BranchId::conflict(&tx);
        let parents = self.txs[&tx].reality.clone();
        let status = if self.reality_status(&parents) == BranchStatus::Rejected {
            BranchStatus::Rejected
        } else {
            BranchStatus::Pending
        };
        self.branches.insert(
            branch_id,
            Branch {
                id: branch_id,
                parents,
                conflicts: BTreeSet::from([contested]),
                tx: Some(tx),
                status,
            },
        );
        let record = &mut self.txs[&tx];
        record.own_branch = Some(branch_id);
        record.reality.insert(branch_id);
        record.attributed.remove(&branch_id);

        let mut queue: VecDeque<TxId> = self.spent_by_tx.get(&tx).cloned().unwrap_or_default().into();
        let mut seen = HashSet::new();
        while let Some(d) = queue.pop_front() {
            if !seen.insert(d) {
                continue;
            }
            let record = &mut self.txs[&d];
            record.reality.insert(branch_id);
            record.attributed.remove(&branch_id);
            if let Some(own) = record.own_branch {
                self.branches[&own].parents.insert(branch_id);
            }
            if let Some(children) = self.spent_by_tx.get(&d) {
                queue.extend(children.iter().copied());
            }
        }
    }

    /// Confirms `winner` (and its ancestors), rejects every competing branch
    /// and their descendants, and re-merges transactions that were only
    /// attributed to a losing branch.
    pub fn resolve_branches(&mut self, winner: BranchId) -> Result<ResolutionReport, ResolveError> {
        let branch = self.branches.get(&winner).ok_or(ResolveError::UnknownBranch(winner))?;
        if branch.status != BranchStatus::Pending {
            return Err(ResolveError::WinnerNotPending(winner));
        }
        let rejected_before: HashSet<TxId> = self
            .txs
            .keys()
            .filter(|t| self.is_tx_rejected(t))
            .copied()
            .collect();

        let mut report = ResolutionReport {
            winner: branch.tx,
            ..Default::default()
        };
        let mut to_confirm: Vec<BranchId> = branch
            .parents
            .iter()
            .filter(|b| self.branches[*b].status == BranchStatus::Pending)
            .copied()
            .collect();
        to_confirm.push(winner);
        to_confirm.sort_by_key(|b| self.branches.get_index_of(b));

        let mut newly_rejected: HashSet<BranchId> = HashSet::new();
        for b in &to_confirm {
            self.branches[b].status = BranchStatus::Confirmed;
            report.confirmed_branches.push(*b);
            for sibling in self.siblings(b) {
                if self.branches[&sibling].status != BranchStatus::Rejected {
                    self.branches[&sibling].status = BranchStatus::Rejected;
                    newly_rejected.insert(sibling);
                }
            }
        }
        let descendants: Vec<BranchId> = self
            .branches
            .values()
            .filter(|b| b.status == BranchStatus::Pending && b.parents.iter().any(|p| newly_rejected.contains(p)))
            .map(|b| b.id)
            .collect();
        for d in descendants {
            self.branches[&d].status = BranchStatus::Rejected;
            newly_rejected.insert(d);
        }
        report.rejected_branches = self
            .branches
            .keys()
            .filter(|b| newly_rejected.contains(*b))
            .copied()
            .collect();

        let ids: Vec<TxId> = self.txs.keys().copied().collect();
        for id in ids {
            if self.is_tx_rejected(&id) {
                if !rejected_before.contains(&id) {
                    report.rejected_txs.push(id);
                }
                continue;
            }
            let record = &self.txs[&id];
            if record.attributed.iter().any(|b| self.branches[b].status == BranchStatus::Rejected) {
                self.txs[&id].attributed.clear();
                report.remerged_txs.push(id);
            }
        }
        Ok(report)
    }

    /// Full scan of the exclusivity, consistency and conservation invariants.
    pub fn audit(&self) -> Result<(), AuditViolation> {
        if self.branch_status(&BranchId::MASTER) != Some(BranchStatus::Confirmed) {
            return Err(AuditViolation::Master);
        }
        for (out, consumers) in &self.consumers {
            let confirmed_members = consumers
                .iter()
                .filter(|c| {
                    self.txs[*c]
                        .own_branch
                        .is_some_and(|b| self.branches[&b].status == BranchStatus::Confirmed)
                })
                .count();
            if confirmed_members > 1 {
                return Err(AuditViolation::Exclusivity(*out));
            }
        }

        // The confirmed reality: every transaction whose reality is fully confirmed.
        let confirmed: Vec<&TxRecord> = self
            .txs
            .values()
            .filter(|r| self.reality_status(&r.reality) == BranchStatus::Confirmed)
            .collect();
        let mut unspent: HashMap<OutputRef, u64> = (0..self.genesis_len)
            .map(|i| (OutputRef::genesis(i), self.outputs[&OutputRef::genesis(i)].output.amount))
            .collect();
        let mut created = Vec::new();
        for record in &confirmed {
            let id = record.tx.id();
            for (i, o) in record.tx.outputs.iter().enumerate() {
                created.push((OutputRef::new(id, i as u16), o.amount));
            }
        }
        unspent.extend(created);
        let mut spent = HashSet::new();
        for record in &confirmed {
            for input in &record.tx.inputs {
                if !spent.insert(*input) {
                    return Err(AuditViolation::DoubleSpend(*input));
                }
                if unspent.remove(input).is_none() {
                    return Err(AuditViolation::Dangling(*input));
                }
            }
        }
        let found: u128 = unspent.values().map(|v| *v as u128).sum();
        if found != self.genesis_supply {
            return Err(AuditViolation::Conservation {
                expected: self.genesis_supply,
                found,
            });
        }
        Ok(())
    }
}

/// Convenience for building genesis outputs owned by addresses.
pub fn genesis_outputs(entries: &[(Address, u64)]) -> Vec<Output> {
    entries
        .iter()
        .map(|(address, amount)| Output {
            address: *address,
            amount: *amount,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::NodeId;

    fn node(i: usize) -> NodeId {
        NodeId::simulated(i)
    }

    fn spend(inputs: Vec<OutputRef>, amounts: &[u64], to: usize) -> Transaction {
        Transaction {
            inputs,
            outputs: amounts
                .iter()
                .map(|a| Output {
                    address: Address::of_node(&node(to)),
                    amount: *a,
                })
                .collect(),
            access_pledge: node(to),
            consensus_pledge: node(to),
        }
    }

    fn ledger() -> UtxoLedger {
        UtxoLedger::new(&genesis_outputs(&[
            (Address([1; 32]), 100),
            (Address([2; 32]), 50),
            (Address([3; 32]), 30),
        ]))
    }

    #[test]
    fn first_spend_is_valid_in_master() {
        let mut l = ledger();
        let tx = spend(vec![OutputRef::genesis(0)], &[60, 40], 1);
        assert_eq!(l.apply_transaction(tx, SimTime::ZERO), ApplyOutcome::Valid(BranchId::MASTER));
        l.audit().unwrap();
    }

    #[test]
    fn double_spend_creates_sibling_branches() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[60, 40], 1);
        let tx2 = spend(vec![OutputRef::genesis(0)], &[100], 2);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        let outcome = l.apply_transaction(tx2.clone(), SimTime::from_micros(1));
        let ApplyOutcome::Conflict { branch, conflict_set } = outcome else {
            panic!("expected conflict, got {outcome:?}");
        };
        assert_eq!(conflict_set, vec![tx1.id(), tx2.id()]);
        assert_eq!(branch, BranchId::conflict(&tx2.id()));
        let b1 = l.tx(&tx1.id()).unwrap().own_branch.unwrap();
        assert_eq!(l.siblings(&branch), vec![b1]);
        assert_eq!(l.branch_status(&b1), Some(BranchStatus::Pending));
        assert_eq!(l.conflict_set(&OutputRef::genesis(0)).len(), 2);
        assert!(l.conflict_set(&OutputRef::genesis(1)).is_empty());
    }

    #[test]
    fn balance_mismatch_is_invalid() {
        let mut l = ledger();
        let tx = spend(vec![OutputRef::genesis(0)], &[90], 1);
        assert_eq!(
            l.apply_transaction(tx, SimTime::ZERO),
            ApplyOutcome::Invalid(InvalidReason::BalanceMismatch { inputs: 100, outputs: 90 })
        );
    }

    #[test]
    fn unknown_input_is_invalid() {
        let mut l = ledger();
        let tx = spend(vec![OutputRef::genesis(9)], &[1], 1);
        assert!(matches!(
            l.apply_transaction(tx, SimTime::ZERO),
            ApplyOutcome::Invalid(InvalidReason::UnknownInput(_))
        ));
    }

    #[test]
    fn spending_own_ancestor_input_again_is_invalid() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[100], 1);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        // Spends tx1's output together with the genesis output tx1 consumed.
        let tx2 = spend(vec![OutputRef::new(tx1.id(), 0), OutputRef::genesis(0)], &[200], 1);
        assert_eq!(
            l.apply_transaction(tx2, SimTime::ZERO),
            ApplyOutcome::Invalid(InvalidReason::AlreadySpent(OutputRef::genesis(0)))
        );
    }

    #[test]
    fn merging_siblings_is_invalid() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[100], 1);
        let tx2 = spend(vec![OutputRef::genesis(0)], &[100], 2);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        l.apply_transaction(tx2.clone(), SimTime::ZERO);
        let merge = spend(vec![OutputRef::new(tx1.id(), 0), OutputRef::new(tx2.id(), 0)], &[200], 3);
        assert_eq!(
            l.apply_transaction(merge, SimTime::ZERO),
            ApplyOutcome::Invalid(InvalidReason::UnmergeableRealities)
        );
    }

    #[test]
    fn resolution_rejects_loser_and_dependants() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[100], 1);
        let tx2 = spend(vec![OutputRef::genesis(0)], &[100], 2);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        l.apply_transaction(tx2.clone(), SimTime::ZERO);
        let tx3 = spend(vec![OutputRef::new(tx2.id(), 0)], &[100], 3);
        assert!(matches!(l.apply_transaction(tx3.clone(), SimTime::ZERO), ApplyOutcome::Valid(_)));

        let winner = BranchId::conflict(&tx1.id());
        let report = l.resolve_branches(winner).unwrap();
        assert_eq!(report.winner, Some(tx1.id()));
        assert_eq!(report.rejected_txs, vec![tx2.id(), tx3.id()]);
        assert!(report.remerged_txs.is_empty());
        assert_eq!(l.branch_status(&winner), Some(BranchStatus::Confirmed));
        assert_eq!(l.branch_status(&BranchId::conflict(&tx2.id())), Some(BranchStatus::Rejected));
        l.audit().unwrap();

        assert_eq!(l.resolve_branches(winner), Err(ResolveError::WinnerNotPending(winner)));
        let bogus = BranchId([7; 32]);
        assert_eq!(l.resolve_branches(bogus), Err(ResolveError::UnknownBranch(bogus)));
    }

    #[test]
    fn late_double_spend_after_resolution_loses() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[100], 1);
        let tx2 = spend(vec![OutputRef::genesis(0)], &[100], 2);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        l.apply_transaction(tx2, SimTime::ZERO);
        l.resolve_branches(BranchId::conflict(&tx1.id())).unwrap();
        let late = spend(vec![OutputRef::genesis(0)], &[100], 3);
        let ApplyOutcome::Conflict { branch, .. } = l.apply_transaction(late, SimTime::ZERO) else {
            panic!()
        };
        assert_eq!(l.branch_status(&branch), Some(BranchStatus::Rejected));
        l.audit().unwrap();
    }

    #[test]
    fn rejected_input_cannot_be_spent() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[100], 1);
        let tx2 = spend(vec![OutputRef::genesis(0)], &[100], 2);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        l.apply_transaction(tx2.clone(), SimTime::ZERO);
        l.resolve_branches(BranchId::conflict(&tx1.id())).unwrap();
        let child = spend(vec![OutputRef::new(tx2.id(), 0)], &[100], 3);
        assert_eq!(
            l.apply_transaction(child, SimTime::ZERO),
            ApplyOutcome::Invalid(InvalidReason::InputRejected)
        );
    }

    #[test]
    fn nested_conflict_inherits_parent_branch() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[100], 1);
        let tx2 = spend(vec![OutputRef::genesis(0)], &[100], 2);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        l.apply_transaction(tx2.clone(), SimTime::ZERO);
        let a = spend(vec![OutputRef::new(tx1.id(), 0)], &[100], 3);
        let b = spend(vec![OutputRef::new(tx1.id(), 0)], &[100], 4);
        l.apply_transaction(a.clone(), SimTime::ZERO);
        l.apply_transaction(b.clone(), SimTime::ZERO);
        let ba = BranchId::conflict(&a.id());
        let b1 = BranchId::conflict(&tx1.id());
        assert!(l.branch(&ba).unwrap().parents.contains(&b1));
        assert_eq!(l.tx_branch(&a.id()), Some(ba));

        // Confirming the nested branch confirms its ancestor and rejects both
        // sibling sets.
        let report = l.resolve_branches(ba).unwrap();
        assert_eq!(report.confirmed_branches, vec![b1, ba]);
        assert_eq!(report.rejected_txs, vec![tx2.id(), b.id()]);
        l.audit().unwrap();
    }

    #[test]
    fn fork_after_descendants_propagates() {
        let mut l = ledger();
        let tx1 = spend(vec![OutputRef::genesis(0)], &[100], 1);
        l.apply_transaction(tx1.clone(), SimTime::ZERO);
        let child = spend(vec![OutputRef::new(tx1.id(), 0)], &[100], 2);
        l.apply_transaction(child.clone(), SimTime::ZERO);
        assert_eq!(l.tx_branch(&child.id()), Some(BranchId::MASTER));
        let tx2 = spend(vec![OutputRef::genesis(0)], &[100], 3);
        l.apply_transaction(tx2, SimTime::ZERO);
        assert_eq!(l.tx_branch(&child.id()), Some(BranchId::conflict(&tx1.id())));
    }

    #[test]
    fn apply_cost_is_independent_of_ledger_size() {
        let cost_after = |prefix: usize| {
            let genesis: Vec<Output> = (0..prefix + 1)
                .map(|_| Output { address: Address([1; 32]), amount: 10 })
                .collect();
            let mut l = UtxoLedger::new(&genesis);
            for i in 0..prefix {
                l.apply_transaction(spend(vec![OutputRef::genesis(i as u16)], &[10], i), SimTime::ZERO);
            }
            let before = l.counters().lookups;
            l.apply_transaction(spend(vec![OutputRef::genesis(prefix as u16)], &[10], 0), SimTime::ZERO);
            l.counters().lookups - before
        };
        assert_eq!(cost_after(10), cost_after(2000));
    }
}
