use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::{indexed_normal, stream_id, Purpose};

/// Truncated cardinal series `Y(x) = Σ_{|n - x/π| ≤ W} a_n sinc(x - nπ)`.
///
/// The nodes sit on the Nyquist lattice `πℤ` of the band `[-1, 1]`, where the
/// shifted sincs are orthonormal; with `a_n` i.i.d. standard normal the
/// untruncated series then has covariance `sin x/x`. Draws are attached to
/// the node index `n`, so any grid sees the same realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincProcessSampler {
    pub truncation_halfwidth: u32,
    pub seed: u64,
    pub trial: u64,
}

impl SincProcessSampler {
    pub fn new(truncation_halfwidth: u32, seed: u64, trial: u64) -> Result<Self> {
        if truncation_halfwidth == 0 {
            return Err(Error::invalid("truncation half-width must be at least 1"));
        }
        Ok(SincProcessSampler {
            truncation_halfwidth,
            seed,
            trial,
        })
    }

    pub fn draw(&self, n: i64) -> f64 {
        indexed_normal(self.seed, stream_id(Purpose::Sinc, self.trial), n)
    }
}

fn sinc(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.sin() / u
    }
}

pub fn sample_sinc_path(sampler: &SincProcessSampler, x_grid: &[f64]) -> Vec<f64> {
    if x_grid.is_empty() {
        return Vec::new();
    }
    let w = sampler.truncation_halfwidth as f64;
    let lo = x_grid.iter().copied().fold(f64::INFINITY, f64::min) / PI;
    let hi = x_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max) / PI;
    let n0 = (lo - w).ceil() as i64;
    let n1 = (hi + w).floor() as i64;
    let draws: Vec<f64> = (n0..=n1).map(|n| sampler.draw(n)).collect();
    x_grid
        .iter()
        .map(|&x| {
            let u = x / PI;
            // lattice points return their own draw exactly
            let k = u.round();
            if (u - k).abs() <= 4.0 * f64::EPSILON * u.abs().max(1.0) {
                return draws[(k as i64 - n0) as usize];
            }
            let a = (u - w).ceil() as i64;
            let b = (u + w).floor() as i64;
            (a..=b)
                .map(|n| draws[(n - n0) as usize] * sinc(x - n as f64 * PI))
                .sum()
        })
        .collect()
}
