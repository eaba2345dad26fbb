//! Named random streams derived from one master seed.
//!
//! Every purpose (a directed link and traffic class, a background
//! generator, a message source) gets its own ChaCha stream so that adding or
//! removing one consumer of randomness never shifts the draws of another.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    master: u64,
}

impl RngStreams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, purpose: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(fnv1a(purpose));
        rng
    }

    /// A child seed, e.g. for one point of a sweep.
    pub fn derive_seed(&self, purpose: &str) -> u64 {
        self.stream(purpose).next_u64()
    }
}
