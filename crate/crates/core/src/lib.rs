//! Deterministic simulator and protocol library for a Tangle 2.0 style
//! DAG ledger: message model, UTXO reality ledger, tip selection and approval
//! weight, mana, adaptive proof of work, and FPC voting.

mod codec;
pub mod config;
pub mod fpc;
pub mod hash;
pub mod ids;
pub mod mana;
pub mod message;
pub mod rate;
pub mod report;
pub mod rng;
pub mod sim;
pub mod tangle;
pub mod time;
pub mod transaction;
pub mod utxo;

pub use ids::{Address, BranchId, MessageId, NodeId, TxId};
pub use time::SimTime;
