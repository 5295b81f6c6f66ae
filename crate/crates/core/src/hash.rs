//! Project-wide content hash (BLAKE2b with a 256-bit digest).

use blake2::digest::consts::U32;
use blake2::{Blake2b, Digest};

type Blake2b256 = Blake2b<U32>;

pub const DIGEST_LEN: usize = 32;

pub fn content_hash(bytes: &[u8]) -> [u8; DIGEST_LEN] {
    Blake2b256::digest(bytes).into()
}

/// Hash of the concatenation of `parts`, without materialising it.
pub fn content_hash_parts(parts: &[&[u8]]) -> [u8; DIGEST_LEN] {
    let mut hasher = Blake2b256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

/// Number of leading zero bits of a digest, 0..=256.
pub fn leading_zero_bits(digest: &[u8; DIGEST_LEN]) -> u32 {
    let mut bits = 0;
    for byte in digest {
        if *byte == 0 {
            bits += 8;
        } else {
            bits += byte.leading_zeros();
            break;
        }
    }
    bits
}
