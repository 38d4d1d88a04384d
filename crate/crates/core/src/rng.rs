//! Counter-based randomness.
//!
//! Every draw made during training is addressed by a full coordinate
//! `(epoch, example, site, i, j, k)` and computed by hashing that coordinate
//! with the run seed. A draw therefore has the same value no matter which
//! thread computes it or in which order, so the packed engine and the dense
//! reference transcription consume identical randomness.
//!
//! A draw is a 32-bit integer `u`; its uniform value is `u / 2^32 ∈ [0, 1)`.
//! A probability test `π < p` is decided exactly in integers as
//! `u < ceil(p · 2^32)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const LANE: u64 = 0xD6E8_FEB8_6659_FD93;
const TWO_POW_32: f64 = 4_294_967_296.0;

/// SplitMix64 finalizer.
#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// wyrand output for counter `n` of a stream keyed by `key`.
#[inline(always)]
fn leaf(key: u64, n: u64) -> u64 {
    let s = key.wrapping_add(n.wrapping_add(1).wrapping_mul(0xA076_1D64_78BD_642F));
    let r = u128::from(s) * u128::from(s ^ 0xE703_7ED1_A0B4_28DB);
    (r as u64) ^ ((r >> 64) as u64)
}

#[inline(always)]
fn absorb(state: u64, value: u64) -> u64 {
    mix64(state.wrapping_add(value.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN))
}

/// Where in the training step a draw is consumed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    /// `π_{i,j}` gating Type I selection.
    TypeI,
    /// `π_{i,j}` gating Type II selection.
    TypeII,
    /// Per-literal gate for Type Ia when true positives are not boosted.
    Ia,
    /// `B^i` entries for Type Ib.
    Ib,
    /// Epoch permutation.
    Shuffle,
}

impl Site {
    const fn tag(self) -> u64 {
        match self {
            Site::TypeI => 0x7479_7065_31,
            Site::TypeII => 0x7479_7065_32,
            Site::Ia => 0x6961,
            Site::Ib => 0x6962,
            Site::Shuffle => 0x7368_7566_666c_65,
        }
    }
}

/// Integer threshold `T` such that `u < T ⇔ u / 2^32 < p` for every 32-bit `u`.
#[inline]
pub fn threshold(p: f64) -> u64 {
    if p.is_nan() || p <= 0.0 {
        0
    } else if p >= 1.0 {
        1 << 32
    } else {
        // p·2^32 is exact (power-of-two scaling), so the ceiling is exact too.
        (p * TWO_POW_32).ceil() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub const fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub const fn seed(&self) -> u64 {
        self.seed
    }

    /// Key for one training step; cheap to derive further coordinates from.
    #[inline]
    pub fn step(&self, epoch: u64, example: u64) -> StepKey {
        let h = absorb(absorb(mix64(self.seed ^ LANE), epoch), example);
        StepKey(h)
    }

    /// The draw at a full coordinate, as a uniform value in `[0, 1)`.
    pub fn uniform(&self, epoch: u64, example: u64, site: Site, i: usize, j: usize, k: usize) -> f64 {
        self.step(epoch, example).stream(site, i, j).uniform(k)
    }

    /// Deterministic permutation generator for `(seed, epoch)`.
    pub fn shuffle_rng(&self, epoch: u64) -> ChaCha8Rng {
        let key = self.step(epoch, u64::MAX).stream(Site::Shuffle, 0, 0).0;
        ChaCha8Rng::seed_from_u64(key)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepKey(u64);

impl StepKey {
    #[inline]
    pub fn stream(self, site: Site, i: usize, j: usize) -> PairStream {
        self.output(site, i).clause(j)
    }

    /// Prefix key for all clauses of output `i` at `site`.
    #[inline]
    pub fn output(self, site: Site, i: usize) -> OutputKey {
        OutputKey(absorb(absorb(self.0, site.tag()), i as u64))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OutputKey(u64);

impl OutputKey {
    #[inline]
    pub fn clause(self, j: usize) -> PairStream {
        PairStream(absorb(self.0, j as u64))
    }
}

/// Draws for one `(site, i, j)` triple, indexed by `k`.
#[derive(Clone, Copy, Debug)]
pub struct PairStream(u64);

impl PairStream {
    /// Raw 32-bit draw at index `k`. Two consecutive indices share one hash.
    #[inline(always)]
    pub fn bits(self, k: usize) -> u32 {
        let w = leaf(self.0, (k >> 1) as u64);
        if k & 1 == 0 {
            w as u32
        } else {
            (w >> 32) as u32
        }
    }

    #[inline]
    pub fn uniform(self, k: usize) -> f64 {
        f64::from(self.bits(k)) / TWO_POW_32
    }

    /// `π_k < p` expressed with a precomputed [`threshold`].
    #[inline(always)]
    pub fn below(self, k: usize, threshold: u64) -> bool {
        u64::from(self.bits(k)) < threshold
    }

    /// 64-bit mask whose bit `b` is `π_{base+b} < p`, restricted to `candidates`.
    /// `base` must be even.
    #[inline]
    pub fn mask(self, base: usize, candidates: u64, threshold: u64) -> u64 {
        debug_assert!(base % 2 == 0);
        if threshold >= 1 << 32 {
            return candidates;
        }
        if threshold == 0 {
            return 0;
        }
        let mut out = 0u64;
        let mut rest = candidates;
        while rest != 0 {
            let b = (rest.trailing_zeros() & !1) as usize;
            let w = leaf(self.0, ((base + b) >> 1) as u64);
            let pair = (u64::from((w as u32 as u64) < threshold) | (u64::from((w >> 32) < threshold) << 1)) << b;
            out |= pair & rest;
            rest &= !(3 << b);
        }
        out
    }
}
