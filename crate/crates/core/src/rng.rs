//! Deterministic random streams.
//!
//! Every run owns one xoshiro256** generator seeded through splitmix64
//! (`seed_from_u64`). Independent sub-streams (one per node, one for the
//! threshold beacon, ...) are carved off with `jump()`, which advances the
//! parent by 2^128 draws, so streams never overlap.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

pub type SimRng = Xoshiro256StarStar;

/// Hands out non-overlapping generator streams derived from one seed.
#[derive(Debug, Clone)]
pub struct StreamSplitter {
    next: SimRng,
}

impl StreamSplitter {
    pub fn new(seed: u64) -> Self {
        Self {
            next: SimRng::seed_from_u64(seed),
        }
    }

    pub fn split(&mut self) -> SimRng {
        let stream = self.next.clone();
        self.next.jump();
        stream
    }

    pub fn split_n(&mut self, n: usize) -> Vec<SimRng> {
        (0..n).map(|_| self.split()).collect()
    }
}

/// Seeds a generator from a seed and a domain label, for streams that must be
/// addressable without replaying the splitter (e.g. the per-round beacon).
pub fn labelled(seed: u64, label: u64) -> SimRng {
    let mut key = SimRng::seed_from_u64(seed);
    let mixed = rand::RngCore::next_u64(&mut key) ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    SimRng::seed_from_u64(mixed)
}
