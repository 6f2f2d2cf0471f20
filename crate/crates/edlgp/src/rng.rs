//! Deterministic random-stream derivation.
//!
//! Every source of randomness in a run is a `ChaCha8` stream whose seed is
//! derived from the run seed plus a sequence of labels (generation numbers,
//! individual indices, fold indices, node subtree renderings). Deriving
//! instead of sharing one mutable generator keeps parallel and serial
//! evaluation schedules bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Identifier of a derived random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamId(u64);

impl StreamId {
    pub fn new(seed: u64) -> StreamId {
        StreamId(splitmix64(seed))
    }

    /// Derive a child stream from a string label (FNV-1a over the bytes,
    /// then mixed into the parent state).
    pub fn child(self, label: &str) -> StreamId {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        StreamId(splitmix64(self.0 ^ h))
    }

    /// Derive a child stream from an integer label.
    pub fn child_u64(self, n: u64) -> StreamId {
        StreamId(splitmix64(self.0.rotate_left(17) ^ n))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}
