//! Portable seeded randomness: ChaCha8 (via `rand_chacha`) keyed with
//! `seed_from_u64`, plus SplitMix64 for deriving sub-seeds and FNV-1a for
//! turning names into seed material. Both helpers are fixed algorithms so
//! seeds reproduce across platforms and releases.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in the closed interval [0, 1].
    pub fn unit_inclusive(&mut self) -> f64 {
        const DENOM: f64 = ((1u64 << 53) - 1) as f64;
        (self.next_u64() >> 11) as f64 / DENOM
    }

    /// Uniform in the closed interval [lo, hi].
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.unit_inclusive();
        (lo + (hi - lo) * u).clamp(lo, hi)
    }

    /// Uniform integer in [0, n); `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit_inclusive() < p
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent seed from a master seed and a stream label.
pub fn sub_seed(master: u64, label: u64) -> u64 {
    splitmix64(splitmix64(master) ^ label)
}

/// 64-bit FNV-1a.
pub fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
