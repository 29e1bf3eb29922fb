//! Deterministic, portable random numbers.
//!
//! The generator identity is part of the crate's reproducibility contract:
//!
//! * stream: **ChaCha12** (`rand_chacha`), keyed with the `u64` seed stored
//!   little-endian in the first 8 bytes of the 32-byte key, zeros elsewhere;
//! * `uniform01` = `(next_u64 >> 11) · 2⁻⁵³` ∈ [0, 1);
//! * `normal` = Box–Muller on a (0, 1]-uniform radius and a [0, 1)-uniform
//!   angle, with the second variate of each pair cached;
//! * task seeds derive as `splitmix64(root +ʷ fnv1a64(task))` where `+ʷ` is
//!   wrapping addition.
//!
//! Identical seeds therefore produce identical streams on every platform and
//! toolchain.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

const TWO_POW_NEG53: f64 = 1.0 / ((1u64 << 53) as f64);

/// Seeded ChaCha12 stream with helpers for the distributions used here.
#[derive(Clone, Debug)]
pub struct Rng {
    stream: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Rng {
            stream: ChaCha12Rng::from_seed(key),
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.stream.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG53
    }

    /// Uniform on [lo, hi).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Standard normal via Box–Muller; pairs are consumed in order, the
    /// second member is cached so consecutive calls cost one pair per two
    /// draws.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // Radius uniform on (0, 1] so the logarithm is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_NEG53;
        let u2 = self.uniform01();
        let r = crate::math::sqrt(-2.0 * crate::math::ln(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare_normal = Some(r * crate::math::sin(theta));
        r * crate::math::cos(theta)
    }

    /// Fisher–Yates shuffle. Indices come from `next_u64 % (i + 1)`; the
    /// modulo bias is ≪ 2⁻⁵⁰ for the slice lengths used here and the rule is
    /// kept for its simplicity and portability.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        let n = xs.len();
        for i in (1..n).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            xs.swap(i, j);
        }
    }
}

/// FNV-1a over raw bytes; used for config hashes and task-seed derivation.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// splitmix64 step: advance by the golden-ratio increment, then mix.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-task seed from a root seed and a task label, so parallel work
/// items get independent, reproducible streams.
pub fn derive_seed(root: u64, task: &str) -> u64 {
    splitmix64(root.wrapping_add(fnv1a64(task.as_bytes())))
}
