//! Seed derivation and counter-addressed random streams.
//!
//! Every random draw in the simulator is addressed by `(seed, stream, row)`,
//! so rows can be generated in any order or in parallel chunks and still
//! produce identical values.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit words consumed per row of a stream (two `u64` draws).
const WORDS_PER_ROW: u128 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `base`, yielding a well-separated child seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Maps a raw `u64` to a uniform in the open interval (0, 1).
#[inline]
pub fn open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// One row's worth of uniforms from a [`CounterStream`].
#[derive(Debug, Clone, Copy)]
pub struct RowDraw {
    pub u1: f64,
    pub u2: f64,
}

impl RowDraw {
    /// Standard normal via Box-Muller; uses both uniforms.
    #[inline]
    pub fn normal(&self) -> f64 {
        (-2.0 * self.u1.ln()).sqrt() * (std::f64::consts::TAU * self.u2).cos()
    }
}

/// A ChaCha8 stream positioned at a row; each row consumes a fixed number
/// of words, so the draw for row `r` never depends on which rows were read
/// before it.
pub struct CounterStream {
    rng: ChaCha8Rng,
}

impl CounterStream {
    pub fn new(seed: u64, stream: u64, row: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(row as u128 * WORDS_PER_ROW);
        Self { rng }
    }

    #[inline]
    pub fn next_row(&mut self) -> RowDraw {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        RowDraw {
            u1: open01(a),
            u2: open01(b),
        }
    }
}

/// Deterministic RNG for non-addressed uses (coefficients, shuffles, masks).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
