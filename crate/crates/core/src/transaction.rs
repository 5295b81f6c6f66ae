//! Value transactions and their canonical encoding.
//!
//! Layout (little-endian): inputCount(2) ∥ inputs(txId 32 ∥ index 2)* ∥
//! outputCount(2) ∥ outputs(address 32 ∥ amount 8)* ∥ accessPledge(32) ∥
//! consensusPledge(32).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::Reader;
use crate::hash::content_hash;
use crate::ids::{Address, NodeId, TxId};
use crate::message::MalformedEncoding;

/// Reference to the `index`-th output of transaction `tx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutputRef {
    pub tx: TxId,
    pub index: u16,
}

impl OutputRef {
    pub fn new(tx: TxId, index: u16) -> Self {
        Self { tx, index }
    }

    pub fn genesis(index: u16) -> Self {
        Self::new(TxId::GENESIS, index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Output {
    pub address: Address,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction {
    pub inputs: Vec<OutputRef>,
    pub outputs: Vec<Output>,
    pub access_pledge: NodeId,
    pub consensus_pledge: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("transaction has no inputs")]
    NoInputs,
    #[error("transaction has no outputs")]
    NoOutputs,
    #[error("input {0:?} listed twice")]
    DuplicateInput(OutputRef),
    #[error("output {0} carries a zero amount")]
    ZeroAmount(usize),
    #[error("too many inputs or outputs for the encoding")]
    TooLarge,
}

impl Transaction {
    pub fn id(&self) -> TxId {
        TxId(content_hash(&self.encode()))
    }

    pub fn output_total(&self) -> u128 {
        self.outputs.iter().map(|o| o.amount as u128).sum()
    }

    /// Checks everything that does not need ledger state.
    pub fn check_shape(&self) -> Result<(), ShapeError> {
        if self.inputs.is_empty() {
            return Err(ShapeError::NoInputs);
        }
        if self.outputs.is_empty() {
            return Err(ShapeError::NoOutputs);
        }
        if self.inputs.len() > u16::MAX as usize || self.outputs.len() > u16::MAX as usize {
            return Err(ShapeError::TooLarge);
        }
        let mut seen = HashSet::with_capacity(self.inputs.len());
        for input in &self.inputs {
            if !seen.insert(*input) {
                return Err(ShapeError::DuplicateInput(*input));
            }
        }
        if let Some(i) = self.outputs.iter().position(|o| o.amount == 0) {
            return Err(ShapeError::ZeroAmount(i));
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        2 + self.inputs.len() * 34 + 2 + self.outputs.len() * 40 + 64
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.inputs.len() as u16).to_le_bytes());
        for input in &self.inputs {
            out.extend_from_slice(input.tx.as_bytes());
            out.extend_from_slice(&input.index.to_le_bytes());
        }
        out.extend_from_slice(&(self.outputs.len() as u16).to_le_bytes());
        for output in &self.outputs {
            out.extend_from_slice(output.address.as_bytes());
            out.extend_from_slice(&output.amount.to_le_bytes());
        }
        out.extend_from_slice(self.access_pledge.as_bytes());
        out.extend_from_slice(self.consensus_pledge.as_bytes());
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, MalformedEncoding> {
        let mut reader = Reader::new(bytes);
        let tx = Self::read(&mut reader)?;
        reader.finish()?;
        Ok(tx)
    }

    pub(crate) fn read(reader: &mut Reader<'_>) -> Result<Self, MalformedEncoding> {
        let input_count = reader.u16()? as usize;
        let mut inputs = Vec::with_capacity(input_count.min(reader.remaining() / 34));
        for _ in 0..input_count {
            let tx = TxId(reader.array()?);
            let index = reader.u16()?;
            inputs.push(OutputRef { tx, index });
        }
        let output_count = reader.u16()? as usize;
        let mut outputs = Vec::with_capacity(output_count.min(reader.remaining() / 40));
        for _ in 0..output_count {
            let address = Address(reader.array()?);
            let amount = reader.u64()?;
            outputs.push(Output { address, amount });
        }
        let access_pledge = NodeId(reader.array()?);
        let consensus_pledge = NodeId(reader.array()?);
        Ok(Self {
            inputs,
            outputs,
            access_pledge,
            consensus_pledge,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Transaction {
        let node = NodeId::simulated(0);
        Transaction {
            inputs: vec![OutputRef::genesis(0)],
            outputs: vec![
                Output { address: Address::of_node(&node), amount: 60 },
                Output { address: Address([9; 32]), amount: 40 },
            ],
            access_pledge: node,
            consensus_pledge: node,
        }
    }

    #[test]
    fn encoding_length_and_round_trip() {
        let tx = sample();
        let bytes = tx.encode();
        assert_eq!(bytes.len(), 2 + 34 + 2 + 80 + 64);
        assert_eq!(Transaction::decode(&bytes).unwrap(), tx);
        assert_eq!(tx.id(), Transaction::decode(&bytes).unwrap().id());
    }

    #[test]
    fn shape_errors() {
        let mut tx = sample();
        tx.inputs.push(tx.inputs[0]);
        assert!(matches!(tx.check_shape(), Err(ShapeError::DuplicateInput(_))));
        let mut tx = sample();
        tx.outputs[1].amount = 0;
        assert_eq!(tx.check_shape(), Err(ShapeError::ZeroAmount(1)));
        let mut tx = sample();
        tx.inputs.clear();
        assert_eq!(tx.check_shape(), Err(ShapeError::NoInputs));
    }

    #[test]
    fn truncated_transaction_is_rejected() {
        let bytes = sample().encode();
        assert!(Transaction::decode(&bytes[..bytes.len() - 1]).is_err());
    }
}
