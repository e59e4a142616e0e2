//! Reproducible random streams.
//!
//! Every random object is derived from a 64-bit master seed plus a stream
//! id. The generator is ChaCha8, whose stream and word counters make each
//! `(seed, stream)` pair an independent, seekable sequence. Trial `k` of an
//! experiment always reads stream `k`, so results never depend on how trials
//! are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Purpose tags occupy the top 16 bits of a stream id so that the trial
/// streams of different consumers never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    Path = 0,
    Jitter = 1,
    Conditional = 2,
    Pairs = 3,
    Sinc = 4,
}

pub fn stream_id(purpose: Purpose, index: u64) -> u64 {
    debug_assert!(index < (1u64 << 48));
    ((purpose as u64) << 48) | index
}

/// Generator for stream `stream` of master seed `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn trial_stream(seed: u64, purpose: Purpose, trial: u64) -> ChaCha8Rng {
    stream(seed, stream_id(purpose, trial))
}

pub fn normal<R: RngCore>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn fill_normal<R: RngCore>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

fn unit_open(bits: u64) -> f64 {
    // (0, 1], never 0 so the logarithm below is finite.
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal attached to an arbitrary integer index.
///
/// The value is a pure function of `(seed, stream, index)`: the generator is
/// positioned at a fixed word offset and two words are turned into a normal
/// by Box-Muller. Used where draws are indexed by position on a lattice
/// rather than consumed sequentially.
pub fn indexed_normal(seed: u64, stream_id: u64, index: i64) -> f64 {
    let mut rng = stream(seed, stream_id);
    // zigzag so that negative indices map to distinct nonnegative offsets
    let z = ((index << 1) ^ (index >> 63)) as u64 as u128;
    rng.set_word_pos(z * 4);
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
