//! The atomic message: header, payload and signature.
//!
//! Canonical layout, little-endian, fixed widths:
//!
//! ```text
//! version(1) ∥ parentCount(1) ∥ parents(32 each) ∥ issuerId(32) ∥
//! timestamp(8, µs) ∥ nonce(8) ∥ payloadTag(1) ∥ payloadLen(4) ∥ payload ∥
//! signature(64)
//! ```
//!
//! The message id is the BLAKE2b-256 digest of the full encoding. The
//! signature is a structural stand-in: the digest of `issuerId ∥ body`
//! repeated to 64 bytes, where `body` is everything before the signature.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::Reader;
use crate::hash::{content_hash, content_hash_parts, leading_zero_bits};
use crate::ids::{MessageId, NodeId};
use crate::time::SimTime;
use crate::transaction::Transaction;

pub const PROTOCOL_VERSION: u8 = 1;
pub const MIN_PARENTS: usize = 2;
pub const MAX_PARENTS: usize = 8;
pub const SIGNATURE_LEN: usize = 64;
/// Encoded size of a two-parent message with an empty data payload.
pub const MIN_ENCODED_LEN: usize = 1 + 1 + 2 * 32 + 32 + 8 + 8 + 1 + 4 + SIGNATURE_LEN;
/// Default tolerated distance between a message timestamp and local time.
pub const DEFAULT_TIME_WINDOW: SimTime = SimTime::from_micros(30_000_000);

const TAG_DATA: u8 = 0;
const TAG_VALUE_TX: u8 = 1;
const TAG_CUSTOM: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Payload {
    Data(Vec<u8>),
    ValueTx(Transaction),
    Custom { app_tag: u32, bytes: Vec<u8> },
}

impl Payload {
    fn tag(&self) -> u8 {
        match self {
            Payload::Data(_) => TAG_DATA,
            Payload::ValueTx(_) => TAG_VALUE_TX,
            Payload::Custom { .. } => TAG_CUSTOM,
        }
    }

    fn encoded_len(&self) -> usize {
        match self {
            Payload::Data(bytes) => bytes.len(),
            Payload::ValueTx(tx) => tx.encoded_len(),
            Payload::Custom { bytes, .. } => 4 + bytes.len(),
        }
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Payload::Data(bytes) => out.extend_from_slice(bytes),
            Payload::ValueTx(tx) => tx.encode_into(out),
            Payload::Custom { app_tag, bytes } => {
                out.extend_from_slice(&app_tag.to_le_bytes());
                out.extend_from_slice(bytes);
            }
        }
    }

    fn decode(tag: u8, bytes: &[u8]) -> Result<Self, MalformedEncoding> {
        match tag {
            TAG_DATA => Ok(Payload::Data(bytes.to_vec())),
            TAG_VALUE_TX => Ok(Payload::ValueTx(Transaction::decode(bytes)?)),
            TAG_CUSTOM => {
                let mut reader = Reader::new(bytes);
                let app_tag = reader.u32()?;
                let rest = reader.take(reader.remaining())?;
                Ok(Payload::Custom {
                    app_tag,
                    bytes: rest.to_vec(),
                })
            }
            other => Err(MalformedEncoding::UnknownPayloadTag(other)),
        }
    }

    pub fn transaction(&self) -> Option<&Transaction> {
        match self {
            Payload::ValueTx(tx) => Some(tx),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; SIGNATURE_LEN]);

impl std::fmt::Debug for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Signature({})", hex::encode(&self.0[..4]))
    }
}

impl Signature {
    fn stub(issuer: &NodeId, body: &[u8]) -> Self {
        let digest = content_hash_parts(&[issuer.as_bytes(), body]);
        let mut sig = [0u8; SIGNATURE_LEN];
        sig[..32].copy_from_slice(&digest);
        sig[32..].copy_from_slice(&digest);
        Signature(sig)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub version: u8,
    pub parents: Vec<MessageId>,
    pub issuer: NodeId,
    pub timestamp: SimTime,
    pub nonce: u64,
    pub payload: Payload,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("parent count {0} outside [{MIN_PARENTS}, {MAX_PARENTS}]")]
    ParentCountOutOfRange(usize),
    #[error("parent {0:?} listed more than once")]
    DuplicateParent(MessageId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MalformedEncoding {
    #[error("truncated at offset {offset}, {needed} more bytes needed")]
    Truncated { offset: usize, needed: usize },
    #[error("unknown payload tag {0}")]
    UnknownPayloadTag(u8),
    #[error("payload length field does not match payload contents")]
    PayloadLengthMismatch,
    #[error("{0} trailing bytes after signature")]
    TrailingBytes(usize),
    #[error("parent count {0} outside the legal range")]
    ParentCount(u8),
}

/// Why a message failed validation. Checks run in the order listed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("structure: {0}")]
    Structure(#[from] BuildError),
    #[error("message lists itself as parent")]
    SelfParent,
    #[error("signature does not cover the message body")]
    BadSignature,
    #[error("proof of work has {found} leading zero bits, {required} required")]
    InsufficientPow { required: u32, found: u32 },
    #[error("timestamp {timestamp} outside the window around {now}")]
    TimestampOutOfWindow { timestamp: SimTime, now: SimTime },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Rejected(Rejection),
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Ok)
    }
}

fn check_parents(parents: &[MessageId]) -> Result<(), BuildError> {
    if !(MIN_PARENTS..=MAX_PARENTS).contains(&parents.len()) {
        return Err(BuildError::ParentCountOutOfRange(parents.len()));
    }
    let mut seen = HashSet::with_capacity(parents.len());
    for parent in parents {
        if !seen.insert(parent) {
            return Err(BuildError::DuplicateParent(*parent));
        }
    }
    Ok(())
}

/// Header bytes covered by the proof of work: everything before the nonce.
pub fn pow_prefix(version: u8, parents: &[MessageId], issuer: &NodeId, timestamp: SimTime) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 + parents.len() * 32 + 40);
    out.push(version);
    out.push(parents.len() as u8);
    for parent in parents {
        out.extend_from_slice(parent.as_bytes());
    }
    out.extend_from_slice(issuer.as_bytes());
    out.extend_from_slice(&timestamp.as_micros().to_le_bytes());
    out
}

pub fn pow_digest(prefix: &[u8], nonce: u64) -> [u8; 32] {
    content_hash_parts(&[prefix, &nonce.to_le_bytes()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonceSearch {
    pub nonce: u64,
    pub attempts: u64,
}

/// Brute-force nonce search starting at `start`.
pub fn search_nonce(prefix: &[u8], difficulty: u32, start: u64) -> NonceSearch {
    let mut nonce = start;
    let mut attempts = 0;
    loop {
        attempts += 1;
        if leading_zero_bits(&pow_digest(prefix, nonce)) >= difficulty {
            return NonceSearch { nonce, attempts };
        }
        nonce = nonce.wrapping_add(1);
    }
}

impl Message {
    /// Assembles a message and signs header and payload.
    pub fn build_and_sign(
        issuer: NodeId,
        parents: Vec<MessageId>,
        payload: Payload,
        timestamp: SimTime,
        nonce: u64,
    ) -> Result<Self, BuildError> {
        check_parents(&parents)?;
        let mut message = Message {
            version: PROTOCOL_VERSION,
            parents,
            issuer,
            timestamp,
            nonce,
            payload,
            signature: Signature([0; SIGNATURE_LEN]),
        };
        message.signature = Signature::stub(&message.issuer, &message.body_bytes());
        Ok(message)
    }

    pub fn encoded_len(&self) -> usize {
        self.body_len() + SIGNATURE_LEN
    }

    fn body_len(&self) -> usize {
        2 + self.parents.len() * 32 + 32 + 8 + 8 + 1 + 4 + self.payload.encoded_len()
    }

    /// Everything the signature covers.
    pub fn body_bytes(&self) -> Vec<u8> {
        let mut out = pow_prefix(self.version, &self.parents, &self.issuer, self.timestamp);
        out.reserve(self.body_len() + SIGNATURE_LEN - out.len());
        out.extend_from_slice(&self.nonce.to_le_bytes());
        out.push(self.payload.tag());
        out.extend_from_slice(&(self.payload.encoded_len() as u32).to_le_bytes());
        self.payload.encode_into(&mut out);
        out
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.body_bytes();
        out.extend_from_slice(&self.signature.0);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, MalformedEncoding> {
        let mut reader = Reader::new(bytes);
        let version = reader.u8()?;
        let parent_count = reader.u8()?;
        if !(MIN_PARENTS..=MAX_PARENTS).contains(&(parent_count as usize)) {
            return Err(MalformedEncoding::ParentCount(parent_count));
        }
        let mut parents = Vec::with_capacity(parent_count as usize);
        for _ in 0..parent_count {
            parents.push(MessageId(reader.array()?));
        }
        let issuer = NodeId(reader.array()?);
        let timestamp = SimTime::from_micros(reader.u64()?);
        let nonce = reader.u64()?;
        let tag = reader.u8()?;
        let len = reader.u32()? as usize;
        let payload_bytes = reader.take(len)?;
        let payload = Payload::decode(tag, payload_bytes)?;
        if payload.encoded_len() != len {
            return Err(MalformedEncoding::PayloadLengthMismatch);
        }
        let signature = Signature(reader.array()?);
        reader.finish()?;
        Ok(Message {
            version,
            parents,
            issuer,
            timestamp,
            nonce,
            payload,
            signature,
        })
    }

    pub fn id(&self) -> MessageId {
        MessageId(content_hash(&self.encode()))
    }

    pub fn verify_signature(&self) -> bool {
        Signature::stub(&self.issuer, &self.body_bytes()) == self.signature
    }

    pub fn pow_prefix(&self) -> Vec<u8> {
        pow_prefix(self.version, &self.parents, &self.issuer, self.timestamp)
    }

    pub fn pow_bits(&self) -> u32 {
        leading_zero_bits(&pow_digest(&self.pow_prefix(), self.nonce))
    }

    pub fn validate(&self, now: SimTime, difficulty: u32) -> Verdict {
        self.validate_with_window(now, difficulty, DEFAULT_TIME_WINDOW)
    }

    pub fn validate_with_window(&self, now: SimTime, difficulty: u32, window: SimTime) -> Verdict {
        match self.first_rejection(now, difficulty, window) {
            None => Verdict::Ok,
            Some(r) => Verdict::Rejected(r),
        }
    }

    fn first_rejection(&self, now: SimTime, difficulty: u32, window: SimTime) -> Option<Rejection> {
        if let Err(e) = check_parents(&self.parents) {
            return Some(e.into());
        }
        if self.parents.contains(&self.id()) {
            return Some(Rejection::SelfParent);
        }
        if !self.verify_signature() {
            return Some(Rejection::BadSignature);
        }
        let found = self.pow_bits();
        if found < difficulty {
            return Some(Rejection::InsufficientPow {
                required: difficulty,
                found,
            });
        }
        let skew = if self.timestamp > now {
            self.timestamp - now
        } else {
            now - self.timestamp
        };
        if skew > window {
            return Some(Rejection::TimestampOutOfWindow {
                timestamp: self.timestamp,
                now,
            });
        }
        None
    }
}
