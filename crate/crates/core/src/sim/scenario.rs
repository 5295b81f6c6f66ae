//! Discrete-event tangle scenario.
//!
//! Each node issues on a Poisson clock. An issuance passes the optional
//! access-mana scheduler, selects tips, solves its proof of work (a node
//! solves one puzzle at a time; issuances while busy are dropped), attaches
//! at completion and reaches the shared view after the propagation delay.
//! Confirmation sweeps run every sim-second and once more at the end.
//!
//! Trace records are one per line: `<seconds> <event> key=value ...`, with
//! events `issue`, `drop`, `pow`, `attach`, `deliver`, `confirm`, `orphan`,
//! `resolve` and `doublespend`.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::InvariantViolation;
use crate::ids::{Address, BranchId, MessageId, NodeId, TxId};
use crate::mana::{ManaKind, ManaLedger, ManaParams};
use crate::message::{Message, Payload};
use crate::rate::{scheduler_quota, PowParams, RateState};
use crate::rng::{SimRng, StreamSplitter};
use crate::sim::events::EventQueue;
use crate::sim::metrics::{ConflictOutcome, MetricsRow};
use crate::tangle::{congestion_level, TangleError, TangleParams, TangleState};
use crate::time::SimTime;
use crate::transaction::{Output, OutputRef, Transaction};
use crate::utxo::{ApplyOutcome, AuditViolation, UtxoLedger};

pub const DEFAULT_ENDOWMENT: f64 = 1000.0;
pub const DEFAULT_GENESIS_AMOUNT: u64 = 1000;
const SWEEP_PERIOD_SECS: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RateOverride {
    pub node: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NodesConfig {
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access_mana: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus_mana: Option<Vec<f64>>,
    #[serde(default)]
    pub issue_rate_overrides: Vec<RateOverride>,
}

impl Default for NodesConfig {
    fn default() -> Self {
        Self {
            count: 10,
            access_mana: None,
            consensus_mana: None,
            issue_rate_overrides: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GenesisEntry {
    pub owner: usize,
    pub amount: u64,
}

/// At `time`, both spenders issue a transaction consuming genesis output
/// `output`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DoubleSpend {
    pub time: f64,
    pub output: u16,
    pub spenders: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Network-wide messages per sim-second, shared by access mana.
    pub budget: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ManaConfig {
    pub half_life: Option<f64>,
}

impl Default for ManaConfig {
    fn default() -> Self {
        Self {
            half_life: ManaParams::default().half_life,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub nodes: NodesConfig,
    #[serde(default = "default_issue_rate")]
    pub issue_rate: f64,
    pub duration: f64,
    #[serde(default = "default_eligibility_age")]
    pub eligibility_age: f64,
    #[serde(default = "default_threshold")]
    pub confirmation_threshold: f64,
    #[serde(default = "default_delay")]
    pub propagation_delay: f64,
    #[serde(default = "default_tip_pool_target")]
    pub tip_pool_target: usize,
    /// Defaults to one output per node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genesis: Option<Vec<GenesisEntry>>,
    #[serde(default)]
    pub double_spend_schedule: Vec<DoubleSpend>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pow: PowParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerConfig>,
    #[serde(default)]
    pub mana: ManaConfig,
}

fn default_issue_rate() -> f64 {
    1.0
}
fn default_eligibility_age() -> f64 {
    crate::tangle::DEFAULT_ELIGIBILITY_AGE_SECS
}
fn default_threshold() -> f64 {
    crate::tangle::DEFAULT_CONFIRMATION_THRESHOLD
}
fn default_delay() -> f64 {
    0.1
}
fn default_tip_pool_target() -> usize {
    crate::tangle::DEFAULT_TIP_POOL_TARGET
}

impl ScenarioConfig {
    pub fn new(nodes: usize, issue_rate: f64, duration: f64, seed: u64) -> Self {
        Self {
            nodes: NodesConfig { count: nodes, ..Default::default() },
            issue_rate,
            duration,
            eligibility_age: default_eligibility_age(),
            confirmation_threshold: default_threshold(),
            propagation_delay: default_delay(),
            tip_pool_target: default_tip_pool_target(),
            genesis: None,
            double_spend_schedule: Vec::new(),
            seed,
            pow: PowParams::default(),
            scheduler: None,
            mana: ManaConfig::default(),
        }
    }

    pub fn genesis_entries(&self) -> Vec<GenesisEntry> {
        self.genesis.clone().unwrap_or_else(|| {
            (0..self.nodes.count)
                .map(|owner| GenesisEntry { owner, amount: DEFAULT_GENESIS_AMOUNT })
                .collect()
        })
    }

    pub fn node_rate(&self, node: usize) -> f64 {
        self.nodes
            .issue_rate_overrides
            .iter()
            .rev()
            .find(|o| o.node == node)
            .map_or(self.issue_rate, |o| o.rate)
    }

    pub fn validate(&self) -> Result<(), InvariantViolation> {
        let fail = |key: String, constraint: &str| Err(InvariantViolation::new(&key, constraint));
        let n = self.nodes.count;
        if n == 0 {
            return fail("nodes.count".into(), "count ≥ 1");
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return fail("duration".into(), "duration > 0");
        }
        if !(self.issue_rate.is_finite() && self.issue_rate >= 0.0) {
            return fail("issueRate".into(), "issueRate ≥ 0");
        }
        for (key, v) in [("nodes.accessMana", &self.nodes.access_mana), ("nodes.consensusMana", &self.nodes.consensus_mana)] {
            if let Some(v) = v {
                if v.len() != n {
                    return fail(key.into(), "one value per node");
                }
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return fail(key.into(), "values finite and ≥ 0");
                }
            }
        }
        for (i, o) in self.nodes.issue_rate_overrides.iter().enumerate() {
            if o.node >= n {
                return fail(format!("nodes.issueRateOverrides[{i}].node"), "node < nodes.count");
            }
            if !(o.rate.is_finite() && o.rate >= 0.0) {
                return fail(format!("nodes.issueRateOverrides[{i}].rate"), "rate ≥ 0");
            }
        }
        if !(self.eligibility_age.is_finite() && self.eligibility_age > 0.0) {
            return fail("eligibilityAge".into(), "eligibilityAge > 0");
        }
        if !(self.confirmation_threshold > 0.0 && self.confirmation_threshold <= 1.0) {
            return fail("confirmationThreshold".into(), "confirmationThreshold ∈ (0, 1]");
        }
        if !(self.propagation_delay.is_finite() && self.propagation_delay >= 0.0) {
            return fail("propagationDelay".into(), "propagationDelay ≥ 0");
        }
        if self.tip_pool_target == 0 {
            return fail("tipPoolTarget".into(), "tipPoolTarget ≥ 1");
        }
        let genesis = self.genesis_entries();
        if genesis.len() > u16::MAX as usize {
            return fail("genesis".into(), "at most 65535 outputs");
        }
        for (i, g) in genesis.iter().enumerate() {
            if g.owner >= n {
                return fail(format!("genesis[{i}].owner"), "owner < nodes.count");
            }
            if g.amount == 0 {
                return fail(format!("genesis[{i}].amount"), "amount > 0");
            }
        }
        for (i, d) in self.double_spend_schedule.iter().enumerate() {
            if !(d.time.is_finite() && d.time >= 0.0 && d.time <= self.duration) {
                return fail(format!("doubleSpendSchedule[{i}].time"), "0 ≤ time ≤ duration");
            }
            if d.output as usize >= genesis.len() {
                return fail(format!("doubleSpendSchedule[{i}].output"), "output names a genesis entry");
            }
            if d.spenders.iter().any(|s| *s >= n) {
                return fail(format!("doubleSpendSchedule[{i}].spenders"), "spender < nodes.count");
            }
            if d.spenders[0] == d.spenders[1] {
                return fail(format!("doubleSpendSchedule[{i}].spenders"), "two distinct spenders");
            }
        }
        let p = &self.pow;
        if !(p.gamma.is_finite() && p.gamma >= 0.0) {
            return fail("pow.gamma".into(), "gamma ≥ 0");
        }
        if !(p.window_seconds.is_finite() && p.window_seconds > 0.0) {
            return fail("pow.windowSeconds".into(), "windowSeconds > 0");
        }
        if !(p.hash_rate.is_finite() && p.hash_rate > 0.0) {
            return fail("pow.hashRate".into(), "hashRate > 0");
        }
        if let Some(s) = &self.scheduler {
            if !(s.budget.is_finite() && s.budget > 0.0) {
                return fail("scheduler.budget".into(), "budget > 0");
            }
        }
        if let Some(h) = self.mana.half_life {
            if !(h.is_finite() && h > 0.0) {
                return fail("mana.halfLife".into(), "halfLife > 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Invalid(#[from] InvariantViolation),
    #[error("node {node} found no eligible tips at {time}s")]
    NoEligibleTips { node: usize, time: f64 },
    #[error("attach failed: {0}")]
    Attach(#[from] TangleError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct NodeStats {
    pub attempted: u64,
    pub dropped_busy: u64,
    pub dropped_quota: u64,
    pub attached: u64,
    pub min_difficulty: Option<u32>,
    pub max_difficulty: Option<u32>,
}

#[derive(Debug)]
pub struct ScenarioOutcome {
    pub metrics: MetricsRow,
    pub trace: String,
    pub nodes: Vec<NodeStats>,
    /// Messages attached at least one eligibility age before the end.
    pub mature: usize,
    pub mature_confirmed: usize,
    pub audit: Result<(), AuditViolation>,
    pub tangle: TangleState,
}

#[derive(Debug)]
enum Event {
    Issue(usize),
    DoubleSpend(usize),
    PowDone { node: usize, parents: Vec<MessageId>, payload: Payload, attempts: u64, difficulty: u32 },
    Deliver(Box<Message>),
    Sweep,
}

struct NodeState {
    id: NodeId,
    rate: f64,
    rng: SimRng,
    busy: bool,
    tokens: f64,
    tokens_at: SimTime,
    pending: VecDeque<Payload>,
    disliked: HashSet<BranchId>,
    stats: NodeStats,
}

/// First-seen bookkeeping for one contested output.
struct ConflictWatch {
    liked: Vec<Option<TxId>>,
}

struct Engine<'a> {
    config: &'a ScenarioConfig,
    end: SimTime,
    queue: EventQueue<Event>,
    nodes: Vec<NodeState>,
    tangle: TangleState,
    mana: ManaLedger,
    rates: RateState,
    genesis: Vec<GenesisEntry>,
    watches: IndexMap<OutputRef, ConflictWatch>,
    pledged: HashSet<TxId>,
    trace: String,
    confirmed: u64,
    latency_sum: f64,
    orphaned: u64,
    outcomes: Vec<ConflictOutcome>,
}

fn secs(t: SimTime) -> String {
    t.to_string()
}

impl<'a> Engine<'a> {
    fn new(config: &'a ScenarioConfig) -> Self {
        let n = config.nodes.count;
        let mut streams = StreamSplitter::new(config.seed);
        let node_rngs = streams.split_n(n);
        let genesis = config.genesis_entries();
        let outputs: Vec<Output> = genesis
            .iter()
            .map(|g| Output { address: Address::of_node(&NodeId::simulated(g.owner)), amount: g.amount })
            .collect();
        let params = TangleParams {
            eligibility_age: SimTime::from_secs_f64(config.eligibility_age),
            confirmation_threshold: config.confirmation_threshold,
            tip_pool_target: config.tip_pool_target,
        };
        let mut mana = ManaLedger::new(ManaParams { half_life: config.mana.half_life });
        for i in 0..n {
            let access = config.nodes.access_mana.as_ref().map_or(DEFAULT_ENDOWMENT, |v| v[i]);
            let consensus = config.nodes.consensus_mana.as_ref().map_or(DEFAULT_ENDOWMENT, |v| v[i]);
            mana.credit(NodeId::simulated(i), access, consensus, SimTime::ZERO);
        }
        let nodes = node_rngs
            .into_iter()
            .enumerate()
            .map(|(i, rng)| NodeState {
                id: NodeId::simulated(i),
                rate: config.node_rate(i),
                rng,
                busy: false,
                tokens: 1.0,
                tokens_at: SimTime::ZERO,
                pending: VecDeque::new(),
                disliked: HashSet::new(),
                stats: NodeStats::default(),
            })
            .collect();
        Self {
            config,
            end: SimTime::from_secs_f64(config.duration),
            queue: EventQueue::new(),
            nodes,
            tangle: TangleState::new(params, UtxoLedger::new(&outputs)),
            mana,
            rates: RateState::new(config.pow),
            genesis,
            watches: IndexMap::new(),
            pledged: HashSet::new(),
            trace: String::new(),
            confirmed: 0,
            latency_sum: 0.0,
            orphaned: 0,
            outcomes: Vec::new(),
        }
    }

    fn schedule_next_issue(&mut self, node: usize, now: SimTime) {
        let rate = self.nodes[node].rate;
        if rate <= 0.0 {
            return;
        }
        let u: f64 = self.nodes[node].rng.random();
        let gap = -(1.0 - u).ln() / rate;
        let at = now + SimTime::from_secs_f64(gap);
        if at <= self.end {
            self.queue.push(at, Event::Issue(node));
        }
    }

    fn run(mut self) -> Result<ScenarioOutcome, ScenarioError> {
        for i in 0..self.nodes.len() {
            self.schedule_next_issue(i, SimTime::ZERO);
        }
        for (i, d) in self.config.double_spend_schedule.iter().enumerate() {
            self.queue.push(SimTime::from_secs_f64(d.time), Event::DoubleSpend(i));
        }
        let whole = self.end.as_micros() / 1_000_000;
        for s in (SWEEP_PERIOD_SECS..=whole).step_by(SWEEP_PERIOD_SECS as usize) {
            self.queue.push(SimTime::from_micros(s * 1_000_000), Event::Sweep);
        }
        while let Some(t) = self.queue.peek_time() {
            if t > self.end {
                break;
            }
            let (now, event) = self.queue.pop().expect("peeked");
            match event {
                Event::Issue(node) => {
                    self.schedule_next_issue(node, now);
                    let _ = writeln!(self.trace, "{} issue node={node}", secs(now));
                    self.attempt(node, now)?;
                }
                Event::DoubleSpend(i) => self.double_spend(i, now)?,
                Event::PowDone { node, parents, payload, attempts, difficulty } => {
                    self.pow_done(node, parents, payload, attempts, difficulty, now)?
                }
                Event::Deliver(msg) => self.deliver(*msg, now)?,
                Event::Sweep => self.sweep(now),
            }
        }
        if !self.end.as_micros().is_multiple_of(1_000_000) {
            self.sweep(self.end);
        }
        Ok(self.finish())
    }

    fn attempt(&mut self, node: usize, now: SimTime) -> Result<(), ScenarioError> {
        let state = &mut self.nodes[node];
        state.stats.attempted += 1;
        if state.busy {
            state.stats.dropped_busy += 1;
            let _ = writeln!(self.trace, "{} drop node={node} reason=busy", secs(now));
            return Ok(());
        }
        if let Some(s) = self.config.scheduler {
            let quota = scheduler_quota(&self.mana, &state.id, now, s.budget);
            let state = &mut self.nodes[node];
            let elapsed = now.saturating_sub(state.tokens_at).as_secs_f64();
            state.tokens = (state.tokens + quota * elapsed).min(quota.max(1.0));
            state.tokens_at = now;
            if state.tokens < 1.0 {
                state.stats.dropped_quota += 1;
                let _ = writeln!(self.trace, "{} drop node={node} reason=quota", secs(now));
                return Ok(());
            }
            state.tokens -= 1.0;
        }
        let difficulty = self.rates.difficulty_for(&self.nodes[node].id, now);
        let eligible = self.tangle.eligible_tips(now, &self.nodes[node].disliked);
        if eligible.is_empty() {
            return Err(ScenarioError::NoEligibleTips { node, time: now.as_secs_f64() });
        }
        let congestion = congestion_level(eligible.len(), self.config.tip_pool_target);
        let state = &mut self.nodes[node];
        let parents = self.tangle.select_from(&eligible, congestion, &mut state.rng)?;
        let attempts = crate::rate::geometric_attempts(difficulty, &mut state.rng);
        let work = attempts / self.config.pow.hash_rate;
        let payload = state.pending.pop_front().unwrap_or(Payload::Data(Vec::new()));
        state.busy = true;
        let _ = writeln!(
            self.trace,
            "{} pow node={node} difficulty={difficulty} parents={}",
            secs(now),
            parents.len()
        );
        if work.is_finite() {
            let done = now + SimTime::from_secs_f64(work);
            let attempts = attempts.min(u64::MAX as f64) as u64;
            self.queue.push(done, Event::PowDone { node, parents, payload, attempts, difficulty });
        }
        Ok(())
    }

    fn double_spend(&mut self, index: usize, now: SimTime) -> Result<(), ScenarioError> {
        let d = self.config.double_spend_schedule[index];
        let input = OutputRef::genesis(d.output);
        let amount = self.genesis[d.output as usize].amount;
        for &s in &d.spenders {
            let node = NodeId::simulated(s);
            let tx = Transaction {
                inputs: vec![input],
                outputs: vec![Output { address: Address::of_node(&node), amount }],
                access_pledge: node,
                consensus_pledge: node,
            };
            let _ = writeln!(
                self.trace,
                "{} doublespend node={s} output={} tx={}",
                secs(now),
                d.output,
                tx.id().short()
            );
            self.nodes[s].pending.push_back(Payload::ValueTx(tx));
            self.attempt(s, now)?;
        }
        Ok(())
    }

    fn pow_done(
        &mut self,
        node: usize,
        parents: Vec<MessageId>,
        payload: Payload,
        attempts: u64,
        difficulty: u32,
        now: SimTime,
    ) -> Result<(), ScenarioError> {
        let state = &mut self.nodes[node];
        state.busy = false;
        state.stats.attached += 1;
        state.stats.min_difficulty = Some(state.stats.min_difficulty.map_or(difficulty, |d| d.min(difficulty)));
        state.stats.max_difficulty = Some(state.stats.max_difficulty.map_or(difficulty, |d| d.max(difficulty)));
        let id = state.id;
        let msg = Message::build_and_sign(id, parents, payload, now, attempts)
            .expect("tip selection yields a valid parent set");
        self.rates.record_issuance(id, now);
        let _ = writeln!(self.trace, "{} attach node={node} id={} difficulty={difficulty}", secs(now), msg.id().short());
        if let Payload::ValueTx(tx) = &msg.payload {
            self.seen(node, tx);
        }
        let delay = SimTime::from_secs_f64(self.config.propagation_delay);
        self.queue.push(now + delay, Event::Deliver(Box::new(msg)));
        if !self.nodes[node].pending.is_empty() {
            self.attempt(node, now)?;
        }
        Ok(())
    }

    /// Records that `node` received `tx`: the first member of a conflict a
    /// node sees is liked, later ones are disliked.
    fn seen(&mut self, node: usize, tx: &Transaction) {
        let id = tx.id();
        let n = self.nodes.len();
        for input in &tx.inputs {
            let watch = self.watches.entry(*input).or_insert_with(|| ConflictWatch { liked: vec![None; n] });
            match watch.liked[node] {
                None => watch.liked[node] = Some(id),
                Some(liked) if liked != id => {
                    self.nodes[node].disliked.insert(BranchId::conflict(&id));
                }
                Some(_) => {}
            }
        }
    }

    fn deliver(&mut self, msg: Message, now: SimTime) -> Result<(), ScenarioError> {
        let issuer = self.nodes.iter().position(|n| n.id == msg.issuer).expect("simulated issuer");
        let tx = msg.payload.transaction().cloned();
        let attached = self.tangle.attach(msg, now)?;
        let outcome = match &attached.payload {
            None => "data",
            Some(ApplyOutcome::Valid(_)) => "valid",
            Some(ApplyOutcome::Conflict { .. }) => "conflict",
            Some(ApplyOutcome::Invalid(_)) => "invalid",
        };
        let _ = writeln!(self.trace, "{} deliver id={} payload={outcome}", secs(now), attached.id.short());
        if let Some(tx) = tx {
            for n in 0..self.nodes.len() {
                if n != issuer {
                    self.seen(n, &tx);
                }
            }
        }
        Ok(())
    }

    fn sweep(&mut self, now: SimTime) {
        let view = self.mana.snapshot(ManaKind::Consensus, now);
        let report = self.tangle.confirmation_sweep(now, &view);
        for r in &report.resolutions {
            for n in &mut self.nodes {
                for b in &r.report.confirmed_branches {
                    n.disliked.remove(b);
                }
            }
            let _ = writeln!(
                self.trace,
                "{} resolve winner={} weight={:.6} rejected={} remerged={}",
                secs(now),
                r.report.winner.map_or("none".into(), |t| t.short()),
                r.branch_weight,
                r.rejected_messages.len(),
                r.remerged_messages.len()
            );
            self.outcomes.push(ConflictOutcome {
                winner: r.report.winner,
                winner_message: r.winner_message,
                rejected_payloads: r.rejected_messages.clone(),
                remerged_count: r.remerged_messages.len(),
                resolved_at: now.as_secs_f64(),
            });
        }
        for id in &report.confirmed {
            let meta = self.tangle.metadata(id).expect("confirmed message exists");
            let latency = now.saturating_sub(meta.attach_time).as_secs_f64();
            self.confirmed += 1;
            self.latency_sum += latency;
            let _ = writeln!(self.trace, "{} confirm id={} latency={latency:.6}", secs(now), id.short());
            if let Some(tx) = meta.payload_tx {
                if self.pledged.insert(tx) {
                    let tx = self.tangle.ledger().tx(&tx).expect("booked").tx.clone();
                    self.mana.pledge_on_transaction(&tx, now);
                }
            }
        }
        for id in &report.orphaned {
            self.orphaned += 1;
            let _ = writeln!(self.trace, "{} orphan id={}", secs(now), id.short());
        }
    }

    fn finish(self) -> ScenarioOutcome {
        let attached: u64 = self.nodes.iter().map(|n| n.stats.attached).sum();
        let duration = self.config.duration;
        let cutoff = self.end.saturating_sub(SimTime::from_secs_f64(self.config.eligibility_age));
        let mut mature = 0;
        let mut mature_confirmed = 0;
        for id in self.tangle.ids() {
            let meta = self.tangle.metadata(id).expect("listed");
            if meta.is_anchor() || meta.attach_time > cutoff {
                continue;
            }
            mature += 1;
            if meta.is_confirmed() {
                mature_confirmed += 1;
            }
        }
        let metrics = MetricsRow {
            tps: Some(attached as f64 / duration),
            mean_confirmation_time: (self.confirmed > 0).then(|| self.latency_sum / self.confirmed as f64),
            orphan_rate: (attached > 0).then(|| self.orphaned as f64 / attached as f64),
            conflicts_resolved: Some(self.outcomes.len()),
            conflict_outcomes: self.outcomes,
            attached: Some(attached),
            duration: Some(duration),
            ..Default::default()
        };
        ScenarioOutcome {
            metrics,
            trace: self.trace,
            nodes: self.nodes.iter().map(|n| n.stats).collect(),
            mature,
            mature_confirmed,
            audit: self.tangle.ledger().audit(),
            tangle: self.tangle,
        }
    }
}

pub fn run_tangle_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome, ScenarioError> {
    config.validate()?;
    Engine::new(config).run()
}
