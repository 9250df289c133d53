//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, stream, counter)`: ChaCha8 keyed by the seed,
//! with the 64-bit stream id as nonce and the counter as the 64-bit word position.
//! Equal triples give equal draws on every platform; each simulated path owns one
//! stream id, so paths can be run in any order or on any thread.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
    /// Number of 64-bit words already consumed from the stream.
    pub counter: u64,
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            seed,
            stream,
            counter: 0,
        }
    }
}

/// Live generator for one stream. Lattice steps consume single bits from a cached
/// word, so [`PathRng::state`] is only exact at word boundaries.
#[derive(Debug, Clone)]
pub struct PathRng {
    seed: u64,
    inner: ChaCha8Rng,
    bits: u64,
    nbits: u32,
}

impl PathRng {
    pub fn new(state: RngState) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(state.seed);
        inner.set_stream(state.stream);
        inner.set_word_pos(u128::from(state.counter) * 2);
        Self {
            seed: state.seed,
            inner,
            bits: 0,
            nbits: 0,
        }
    }

    pub fn for_path(seed: u64, path: u64) -> Self {
        Self::new(RngState::new(seed, path))
    }

    /// Position of the next unconsumed word. Cached bits are dropped.
    pub fn state(&self) -> RngState {
        RngState {
            seed: self.seed,
            stream: self.inner.get_stream(),
            counter: self.inner.get_word_pos().div_ceil(2) as u64,
        }
    }

    /// `count ≤ 64` fresh bits in the low end of the result.
    #[inline]
    pub fn next_bits(&mut self, count: u32) -> u64 {
        debug_assert!(count >= 1 && count <= 64);
        if count == 64 {
            return self.inner.next_u64();
        }
        if self.nbits < count {
            self.bits = self.inner.next_u64();
            self.nbits = 64;
        }
        let out = self.bits & ((1u64 << count) - 1);
        self.bits >>= count;
        self.nbits -= count;
        out
    }

    /// Uniform on `(0, 1]` with 53 bits of resolution.
    #[inline]
    pub fn open_unit(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for PathRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Deterministic child seed for a labelled sub-experiment.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_triple_same_draws() {
        let s = RngState {
            seed: 11,
            stream: 5,
            counter: 3,
        };
        let a: Vec<u64> = {
            let mut r = PathRng::new(s);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = PathRng::new(s);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn counter_addresses_words() {
        let mut r = PathRng::for_path(99, 2);
        let words: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(r.state().counter, 4);
        let mut resumed = PathRng::new(RngState {
            seed: 99,
            stream: 2,
            counter: 2,
        });
        assert_eq!(resumed.next_u64(), words[2]);
    }

    #[test]
    fn streams_differ() {
        let mut a = PathRng::for_path(1, 0);
        let mut b = PathRng::for_path(1, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn bits_are_balanced() {
        let mut r = PathRng::for_path(7, 0);
        let ones: u64 = (0..100_000).map(|_| r.next_bits(1)).sum();
        // 5σ band for a fair coin
        assert!((ones as f64 - 50_000.0).abs() < 5.0 * 158.2, "{ones}");
    }

    #[test]
    fn open_unit_range() {
        let mut r = PathRng::for_path(3, 3);
        for _ in 0..10_000 {
            let u = r.open_unit();
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
