//! 32-byte identifiers used across the ledger.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hash::content_hash_parts;

macro_rules! digest_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
        pub struct $name(pub [u8; 32]);

        impl $name {
            pub const fn as_bytes(&self) -> &[u8; 32] {
                &self.0
            }

            /// First eight hex digits, for traces and logs.
            pub fn short(&self) -> String {
                hex::encode(&self.0[..4])
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!(stringify!($name), "({})"), self.short())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&hex::encode(self.0))
            }
        }
    };
}

digest_id!(
    /// Content hash of a message's canonical encoding.
    MessageId
);
digest_id!(
    /// Identity of an issuing node.
    NodeId
);
digest_id!(
    /// Content hash of a transaction's canonical encoding.
    TxId
);
digest_id!(
    /// Identifier of a ledger reality (conflict or aggregated branch).
    BranchId
);
digest_id!(
    /// Token address; opaque to the ledger.
    Address
);

impl NodeId {
    /// Deterministic id of the `index`-th simulated node.
    pub fn simulated(index: usize) -> Self {
        NodeId(content_hash_parts(&[b"node", &(index as u64).to_le_bytes()]))
    }
}

impl Address {
    /// Default receiving address of a node.
    pub fn of_node(node: &NodeId) -> Self {
        Address(content_hash_parts(&[b"address", node.as_bytes()]))
    }
}

impl BranchId {
    /// The master reality, which is always confirmed.
    pub const MASTER: BranchId = BranchId([0u8; 32]);

    /// Conflict branch created for a double-spending transaction.
    pub fn conflict(tx: &TxId) -> Self {
        BranchId(content_hash_parts(&[b"branch", tx.as_bytes()]))
    }
}

impl MessageId {
    /// The two genesis anchors every bootstrap message approves.
    pub fn genesis_anchor(index: u8) -> Self {
        MessageId(content_hash_parts(&[b"genesis-anchor", &[index]]))
    }
}

impl TxId {
    /// Pseudo transaction that owns the genesis outputs.
    pub const GENESIS: TxId = TxId([0u8; 32]);
}
