use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;
use tangle_core::fpc::{eta, run_fpc, FpcConfig, Opinion};
use tangle_core::ids::{Address, BranchId, MessageId, NodeId, TxId};
use tangle_core::mana::{ManaKind, ManaLedger, ManaParams, ManaSampler, ManaSnapshot};
use tangle_core::message::{Message, Payload, MIN_ENCODED_LEN};
use tangle_core::rate::PowParams;
use tangle_core::tangle::{TangleParams, TangleState};
use tangle_core::transaction::{Output, OutputRef, Transaction};
use tangle_core::utxo::{ApplyOutcome, BranchStatus, InvalidReason, UtxoLedger};
use tangle_core::SimTime;

fn node() -> impl Strategy<Value = NodeId> {
    any::<[u8; 32]>().prop_map(NodeId)
}

fn transaction() -> impl Strategy<Value = Transaction> {
    (
        prop::collection::vec((any::<[u8; 32]>(), any::<u16>()), 1..4),
        prop::collection::vec((any::<[u8; 32]>(), any::<u64>()), 1..4),
        node(),
        node(),
    )
        .prop_map(|(ins, outs, a, c)| Transaction {
            inputs: ins.into_iter().map(|(t, i)| OutputRef::new(TxId(t), i)).collect(),
            outputs: outs.into_iter().map(|(addr, amount)| Output { address: Address(addr), amount }).collect(),
            access_pledge: a,
            consensus_pledge: c,
        })
}

fn payload() -> impl Strategy<Value = Payload> {
    prop_oneof![
        prop::collection::vec(any::<u8>(), 0..64).prop_map(Payload::Data),
        transaction().prop_map(Payload::ValueTx),
        (any::<u32>(), prop::collection::vec(any::<u8>(), 0..32)).prop_map(|(app_tag, bytes)| Payload::Custom { app_tag, bytes }),
    ]
}

fn message() -> impl Strategy<Value = Message> {
    (
        prop::collection::hash_set(any::<[u8; 32]>(), 2..=8),
        node(),
        any::<u64>(),
        any::<u64>(),
        payload(),
    )
        .prop_map(|(parents, issuer, ts, nonce, payload)| {
            let mut parents: Vec<MessageId> = parents.into_iter().map(MessageId).collect();
            parents.sort();
            Message::build_and_sign(issuer, parents, payload, SimTime(ts), nonce).unwrap()
        })
}

proptest! {
    #[test]
    fn codec_round_trips(m in message()) {
        let bytes = m.encode();
        prop_assert_eq!(bytes.len(), m.encoded_len());
        prop_assert!(bytes.len() >= MIN_ENCODED_LEN);
        let back = Message::decode(&bytes).unwrap();
        prop_assert_eq!(back.encode(), bytes);
        prop_assert_eq!(back.id(), m.id());
        prop_assert_eq!(back, m);
    }

    #[test]
    fn id_and_signature_cover_every_header_field(m in message(), delta in 1u64..u64::MAX, field in 0usize..4) {
        let mut changed = m.clone();
        match field {
            0 => changed.nonce = m.nonce.wrapping_add(delta),
            1 => changed.timestamp = SimTime(m.timestamp.0.wrapping_add(delta)),
            2 => changed.parents[0].0[0] ^= (delta % 255 + 1) as u8,
            _ => changed.issuer.0[31] ^= (delta % 255 + 1) as u8,
        }
        prop_assert_ne!(changed.id(), m.id());
        prop_assert!(m.verify_signature());
        prop_assert!(!changed.verify_signature());
    }

    #[test]
    fn truncation_never_decodes(m in message(), cut in 1usize..64) {
        let bytes = m.encode();
        let cut = cut.min(bytes.len());
        prop_assert!(Message::decode(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn decay_is_order_independent(
        credits in prop::collection::vec((0u64..10_000_000_000, 0.0f64..1e6), 1..12),
        probes in prop::collection::vec(0u64..10_000_000_000, 0..6),
        half_life in 1.0f64..1e5,
    ) {
        let params = ManaParams { half_life: Some(half_life) };
        let n = NodeId::simulated(0);
        let mut sorted = credits.clone();
        sorted.sort_by_key(|c| c.0);
        let end = SimTime(sorted.last().unwrap().0 + 1_000_000);

        let mut direct = ManaLedger::new(params);
        for (t, x) in &sorted {
            direct.credit(n, *x, *x, SimTime(*t));
        }
        // The same credits with extra zero credits (forced decays) interleaved.
        let mut interleaved = ManaLedger::new(params);
        let mut events: Vec<(u64, f64)> = sorted.clone();
        events.extend(probes.iter().filter(|p| **p <= end.0).map(|p| (*p, 0.0)));
        events.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
        for (t, x) in &events {
            interleaved.credit(n, *x, *x, SimTime(*t));
        }
        let closed: f64 = sorted
            .iter()
            .map(|(t, x)| x * (-((end.0 - t) as f64) / 1e6 / half_life).exp2())
            .sum();
        for l in [&direct, &interleaved] {
            let got = l.decayed_mana(&n, ManaKind::Consensus, end);
            prop_assert!((got - closed).abs() <= 1e-9 * closed.max(1.0), "{} vs {}", got, closed);
        }
    }

    #[test]
    fn eta_is_scale_invariant(
        resp in prop::collection::vec((0.001f64..1e3, any::<bool>()), 1..40),
        factor in 1e-6f64..1e6,
    ) {
        let base: Vec<(f64, Opinion)> = resp.iter().map(|(w, l)| (*w, if *l { Opinion::Like } else { Opinion::Dislike })).collect();
        let scaled: Vec<(f64, Opinion)> = base.iter().map(|(w, o)| (w * factor, *o)).collect();
        let (a, b) = (eta(&base), eta(&scaled));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300) || (a - b).abs() < 1e-15);
    }

    #[test]
    fn sampler_draws_ignore_power_of_two_scaling(
        weights in prop::collection::vec(0.01f64..100.0, 2..10),
        exp in -20i32..20,
        seed: u64,
    ) {
        let factor = (exp as f64).exp2();
        let base = ManaSampler::new(weights.iter().enumerate().map(|(i, w)| (NodeId::simulated(i), *w)));
        let scaled = ManaSampler::new(weights.iter().enumerate().map(|(i, w)| (NodeId::simulated(i), w * factor)));
        let mut r1 = Xoshiro256StarStar::seed_from_u64(seed);
        let mut r2 = Xoshiro256StarStar::seed_from_u64(seed);
        for _ in 0..50 {
            prop_assert_eq!(base.sample(&mut r1), scaled.sample(&mut r2));
        }
    }

    #[test]
    fn difficulty_is_monotone(
        recent in 0usize..500,
        more in 0usize..500,
        gamma in 0.0f64..4.0,
        extra_gamma in 0.0f64..4.0,
        allowance in 0u32..50,
    ) {
        let p = PowParams { gamma, allowance, ..PowParams::default() };
        let steeper = PowParams { gamma: gamma + extra_gamma, ..p };
        prop_assert!(p.difficulty_for_count(recent) <= p.difficulty_for_count(recent + more));
        prop_assert!(p.difficulty_for_count(recent) <= steeper.difficulty_for_count(recent));
        prop_assert!(p.difficulty_for_count(recent) >= p.base_difficulty);
        if recent <= allowance as usize {
            prop_assert_eq!(p.difficulty_for_count(recent), p.base_difficulty);
        }
    }
}


fn past_cone_txs(txs: &[Transaction], tx: &Transaction) -> Vec<Transaction> {
    let mut out = vec![tx.clone()];
    let mut i = 0;
    while i < out.len() {
        for input in out[i].inputs.clone() {
            if let Some(p) = txs.iter().find(|t| t.id() == input.tx) {
                if !out.iter().any(|o| o.id() == p.id()) {
                    out.push(p.clone());
                }
            }
        }
        i += 1;
    }
    out
}

fn consumers(txs: &[Transaction], out: &OutputRef) -> usize {
    txs.iter().filter(|t| t.inputs.contains(out)).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ledger_matches_rescan_and_audits_after_resolution(
        steps in prop::collection::vec((prop::collection::vec(any::<u8>(), 1..3), any::<u8>(), any::<bool>()), 1..25),
        pick in any::<prop::sample::Index>(),
    ) {
        let genesis: Vec<Output> = (0..4).map(|i| Output { address: Address::of_node(&NodeId::simulated(i)), amount: 100 }).collect();
        let mut ledger = UtxoLedger::new(&genesis);
        let mut known: Vec<(OutputRef, u64)> = (0..4).map(|i| (OutputRef::genesis(i), 100)).collect();
        let mut booked: Vec<Transaction> = Vec::new();
        for (n, (ins, split, two)) in steps.iter().enumerate() {
            let mut inputs: Vec<OutputRef> = Vec::new();
            let mut sum = 0u64;
            for b in ins {
                let (r, a) = known[*b as usize % known.len()];
                if !inputs.contains(&r) {
                    inputs.push(r);
                    sum += a;
                }
            }
            let to = Address::of_node(&NodeId::simulated(n));
            let outputs = if *two && sum > 1 {
                let first = 1 + (*split as u64) % (sum - 1);
                vec![Output { address: to, amount: first }, Output { address: to, amount: sum - first }]
            } else {
                vec![Output { address: to, amount: sum }]
            };
            let tx = Transaction { inputs: inputs.clone(), outputs: outputs.clone(), access_pledge: NodeId::simulated(n), consensus_pledge: NodeId::simulated(n) };
            let id = tx.id();
            // An input already consumed by an ancestor makes the transaction invalid.
            let mut with_tx = booked.clone();
            with_tx.push(tx.clone());
            let cone = past_cone_txs(&with_tx, &tx);
            let reuses = cone.iter().skip(1).any(|a| a.inputs.iter().any(|i| inputs.contains(i)));
            match ledger.apply_transaction(tx.clone(), SimTime(n as u64)) {
                ApplyOutcome::Invalid(InvalidReason::AlreadySpent(_)) => prop_assert!(reuses),
                ApplyOutcome::Invalid(InvalidReason::UnmergeableRealities) => prop_assert!(!reuses),
                ApplyOutcome::Invalid(other) => prop_assert!(false, "unexpected {:?}", other),
                ApplyOutcome::Valid(_) | ApplyOutcome::Conflict { .. } => {
                    prop_assert!(!reuses);
                    booked.push(tx.clone());
                    for (i, o) in outputs.iter().enumerate() {
                        known.push((OutputRef::new(id, i as u16), o.amount));
                    }
                }
            }
        }
        for tx in &booked {
            let conflicting = |t: &Transaction| t.inputs.iter().any(|i| consumers(&booked, i) > 1);
            let expected: BTreeSet<BranchId> = past_cone_txs(&booked, tx)
                .iter()
                .filter(|t| conflicting(t))
                .map(|t| BranchId::conflict(&t.id()))
                .collect();
            prop_assert_eq!(&ledger.tx(&tx.id()).unwrap().reality, &expected);
        }
        ledger.audit().unwrap();

        let pending: Vec<BranchId> = ledger
            .branches()
            .filter(|b| ledger.branch_status(&b.id) == Some(BranchStatus::Pending))
            .map(|b| b.id)
            .collect();
        if !pending.is_empty() {
            let winner = pending[pick.index(pending.len())];
            let report = ledger.resolve_branches(winner).unwrap();
            ledger.audit().unwrap();
            prop_assert_eq!(ledger.branch_status(&winner), Some(BranchStatus::Confirmed));
            let rejected: HashSet<TxId> = report.rejected_txs.iter().copied().collect();
            for tx in &booked {
                let reality = &ledger.tx(&tx.id()).unwrap().reality;
                if reality.contains(&winner) {
                    prop_assert!(!rejected.contains(&tx.id()));
                }
            }
        }
    }

    #[test]
    fn approval_weight_is_mana_scale_invariant(
        edges in prop::collection::vec((any::<u8>(), prop::collection::vec(any::<u16>(), 2..5)), 1..30),
        mana in prop::collection::vec(0.1f64..100.0, 4),
        factor in 1e-6f64..1e6,
    ) {
        let mut t = TangleState::new(TangleParams::default(), UtxoLedger::new(&[]));
        let mut ids = vec![MessageId::genesis_anchor(0), MessageId::genesis_anchor(1)];
        for (i, (issuer, picks)) in edges.iter().enumerate() {
            let mut parents: Vec<MessageId> = picks.iter().map(|p| ids[*p as usize % ids.len()]).collect();
            parents.sort();
            parents.dedup();
            if parents.len() < 2 {
                parents = vec![ids[ids.len() - 1], ids[ids.len() - 2]];
            }
            let m = Message::build_and_sign(
                NodeId::simulated(*issuer as usize % 4),
                parents,
                Payload::Data((i as u32).to_le_bytes().to_vec()),
                SimTime(i as u64),
                0,
            ).unwrap();
            t.attach(m.clone(), SimTime::ZERO).unwrap();
            ids.push(m.id());
        }
        let view = ManaSnapshot::from_pairs(mana.iter().enumerate().map(|(i, m)| (NodeId::simulated(i), *m)));
        let scaled = view.scaled(factor);
        for id in &ids[2..] {
            let a = t.approval_weight(id, &view).unwrap();
            let b = t.approval_weight(id, &scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-12), "{} vs {}", a, b);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fpc_outcome_ignores_power_of_two_mana_scaling(seed: u64, exp in -10i32..10) {
        let mut config = FpcConfig::new(30, 8, 0.1, seed);
        config.mana_weighting = true;
        config.mana_weights = Some((0..30).map(|i| 1.0 + (i % 7) as f64).collect());
        let base = run_fpc(&config).unwrap();
        let factor = (exp as f64).exp2();
        config.mana_weights = Some(config.mana_weights.unwrap().iter().map(|w| w * factor).collect());
        let scaled = run_fpc(&config).unwrap();
        prop_assert_eq!(base.per_node, scaled.per_node);
        prop_assert_eq!(base.rounds_run, scaled.rounds_run);
    }
}
