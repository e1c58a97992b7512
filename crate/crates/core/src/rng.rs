//! Seeded random streams and trial-seed derivation.
//!
//! Every random decision in a run is drawn from an [`RngStream`]. Streams are
//! ChaCha8 generators, so a given seed produces the same sequence on every
//! platform. Independent sub-streams of one seed are obtained through the
//! ChaCha stream counter rather than by reseeding.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Increment of the SplitMix64 generator (odd, so `i * GOLDEN_GAMMA` is injective).
pub const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function. A bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` in a batch seeded with `base`.
///
/// This is the `index`-th output (0-based) of a SplitMix64 generator started
/// at `base`: `mix64(base + (index + 1) * GOLDEN_GAMMA)`. Distinct indices
/// always give distinct seeds, and the seed of a trial does not depend on how
/// many other trials the batch contains.
#[inline]
pub fn trial_seed(base: u64, index: u64) -> u64 {
    mix64(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Named sub-streams of a run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Substream {
    /// Initial search point.
    Init = 0,
    /// Mutation and selection tie-breaking.
    Variation = 1,
    /// Auxiliary sampling (point sources, probes).
    Aux = 2,
}

#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream `which` derived from `seed`.
    pub fn substream(seed: u64, which: Substream) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(which as u64);
        Self(rng)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
