use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mollify::JointCovariance;
use crate::rng::{normal, trial_stream, Purpose};

use super::trig::{eval_poly, Path, TrigPolynomial};

/// A stationary process on the circle `[-πm, πm]` given by its spectrum:
/// `Y(x) = amp₀ a₀ + Σ_{n≥1} amp_n (a_n cos(nx/m) + b_n sin(nx/m))`.
#[derive(Debug, Clone)]
pub struct SpectralProcess {
    m: f64,
    amplitudes: Vec<f64>,
    gaussians: Arc<[(f64, f64)]>,
}

impl SpectralProcess {
    pub fn new(m: f64, amplitudes: Vec<f64>, gaussians: Arc<[(f64, f64)]>) -> Result<Self> {
        if amplitudes.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::invalid("spectral amplitudes must be nonnegative"));
        }
        if gaussians.len() < amplitudes.len() {
            return Err(Error::invalid("fewer gaussian pairs than amplitudes"));
        }
        Ok(SpectralProcess {
            m,
            amplitudes,
            gaussians,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn gaussians(&self) -> &Arc<[(f64, f64)]> {
        &self.gaussians
    }

    pub fn truncation_index(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// The path as a trigonometric polynomial in `t = x/m`.
    pub fn to_poly(&self) -> TrigPolynomial {
        let k = self.truncation_index().max(1);
        let mut sin = vec![0.0; k];
        let mut cos = vec![0.0; k];
        for n in 1..self.amplitudes.len() {
            let (a, b) = self.gaussians[n];
            cos[n - 1] = self.amplitudes[n] * a;
            sin[n - 1] = self.amplitudes[n] * b;
        }
        let c = self.amplitudes[0] * self.gaussians[0].0;
        TrigPolynomial::with_constant(c, sin, cos, 1.0).expect("consistent lengths")
    }

    pub fn path(&self) -> ScaledPath {
        ScaledPath {
            poly: self.to_poly(),
            m: self.m,
        }
    }

    /// Covariance `Σ amp_n² cos(nx/m)` implied by the amplitudes.
    pub fn covariance(&self, x: f64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| a * a * (n as f64 * x / self.m).cos())
            .sum()
    }
}

/// A trigonometric polynomial read in the scaled variable `x = mt`.
#[derive(Debug, Clone)]
pub struct ScaledPath {
    pub poly: TrigPolynomial,
    pub m: f64,
}

impl Path for ScaledPath {
    fn eval(&self, x: f64) -> (f64, f64) {
        let (v, d) = eval_poly(&self.poly, x / self.m);
        (v, d / self.m)
    }

    fn period(&self) -> f64 {
        TAU * self.m
    }

    fn bandwidth(&self) -> usize {
        self.poly.degree()
    }

    fn amplitude_scale(&self) -> f64 {
        self.poly.amplitude_scale()
    }

    fn values_on_grid(&self, a: f64, b: f64, points: usize) -> Vec<f64> {
        self.poly.values_on_grid(a / self.m, b / self.m, points)
    }

    fn derivatives_on_grid(&self, a: f64, b: f64, points: usize) -> Vec<f64> {
        let mut d = self.poly.derivatives_on_grid(a / self.m, b / self.m, points);
        d.iter_mut().for_each(|x| *x /= self.m);
        d
    }
}

/// Amplitudes of the coupled pair `(Y_N, Y_N^M)`; reusable across trials.
#[derive(Debug, Clone)]
pub struct SpectralDesign {
    joint: Arc<JointCovariance>,
    base: Vec<f64>,
    mollified: Vec<f64>,
}

impl SpectralDesign {
    pub fn new(n: usize, big_m: f64, tail_eps: f64) -> Result<Self> {
        let m = n as f64 + 0.5;
        if !(big_m > 0.0 && big_m < PI * m) {
            return Err(Error::invalid(format!("M = {big_m} must lie in (0, πm) with m = {m}")));
        }
        let joint = JointCovariance::with_tail(n, big_m, tail_eps, crate::mollify::joint::MAX_SPECTRAL_INDEX)?;
        Ok(Self::from_joint(Arc::new(joint)))
    }

    pub fn from_joint(joint: Arc<JointCovariance>) -> Self {
        let n = joint.degree();
        let m = joint.m();
        let unit = 1.0 / (2.0 * PI * m).sqrt();
        // variance carried by harmonic k: r̂(0)/√(2πm) at k = 0, 2 r̂(k)/√(2πm) above
        let weight = |k: usize, rhat: f64| if k == 0 { rhat * unit } else { 2.0 * rhat * unit };
        let base = (0..=n).map(|k| weight(k, joint.rhat_base(k as i64)).sqrt()).collect();
        let mollified = joint
            .rhat_mollified_all()
            .iter()
            .enumerate()
            .map(|(k, &r)| weight(k, r).sqrt())
            .collect();
        SpectralDesign {
            joint,
            base,
            mollified,
        }
    }

    pub fn joint(&self) -> &Arc<JointCovariance> {
        &self.joint
    }

    pub fn degree(&self) -> usize {
        self.joint.degree()
    }

    pub fn m(&self) -> f64 {
        self.joint.m()
    }

    pub fn base_amplitudes(&self) -> &[f64] {
        &self.base
    }

    pub fn mollified_amplitudes(&self) -> &[f64] {
        &self.mollified
    }

    pub fn truncation_index(&self) -> usize {
        self.mollified.len() - 1
    }

    /// Draw trial `trial` of the coupled pair; both share one gaussian sequence.
    pub fn sample(&self, seed: u64, trial: u64) -> (SpectralProcess, SpectralProcess) {
        let mut rng = trial_stream(seed, Purpose::Path, trial);
        let k = self.truncation_index().max(self.degree());
        let g: Arc<[(f64, f64)]> = (0..=k).map(|_| (normal(&mut rng), normal(&mut rng))).collect();
        let base = SpectralProcess {
            m: self.m(),
            amplitudes: self.base.clone(),
            gaussians: g.clone(),
        };
        let moll = SpectralProcess {
            m: self.m(),
            amplitudes: self.mollified.clone(),
            gaussians: g,
        };
        (base, moll)
    }
}

/// `(Y_N, Y_N^M)` sharing their gaussians, with spectral tail below `tail_eps`.
pub fn coupled_spectral_paths(
    n: usize,
    big_m: f64,
    seed: u64,
    tail_eps: f64,
) -> Result<(SpectralProcess, SpectralProcess)> {
    Ok(SpectralDesign::new(n, big_m, tail_eps)?.sample(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::trig::sample_qualls;

    #[test]
    fn base_spectrum_is_flat_on_the_band() {
        let d = SpectralDesign::new(20, 4.0, 1e-10).unwrap();
        assert_eq!(d.base_amplitudes()[0], 0.0);
        for k in 1..=20 {
            assert!((d.base_amplitudes()[k].powi(2) - 1.0 / 20.0).abs() < 1e-14);
        }
        assert!(d.mollified_amplitudes().iter().all(|&a| a >= 0.0));
        let total: f64 = d.mollified_amplitudes().iter().map(|a| a * a).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coupled_paths_share_draws() {
        let (y, ym) = coupled_spectral_paths(10, 3.0, 9, 1e-10).unwrap();
        assert!(Arc::ptr_eq(y.gaussians(), ym.gaussians()));
        assert!(ym.truncation_index() > y.truncation_index());
        assert!(coupled_spectral_paths(10, PI * 10.5, 9, 1e-10).is_err());
    }

    #[test]
    fn base_process_matches_qualls_law() {
        // Y_N(x) = X_N(x/m) in law: the covariance is r_N(x/m)
        let d = SpectralDesign::new(15, 2.0, 1e-10).unwrap();
        let (y, _) = d.sample(1, 0);
        let q = crate::analytic::covariance::QuallsCovariance::new(15);
        for &x in &[0.0, 1.0, 7.5] {
            assert!((y.covariance(x) - q.triple(x / 15.5).0).abs() < 1e-14);
        }
        let _ = sample_qualls(3, 1);
    }

    #[test]
    fn mollified_covariance_matches_product() {
        let d = SpectralDesign::new(40, 10.0, 1e-10).unwrap();
        let (_, ym) = d.sample(0, 0);
        for &x in &[0.5, 2.0, 9.0] {
            assert!((ym.covariance(x) - d.joint().mollified(x).0).abs() < 1e-9);
        }
    }

    #[test]
    fn path_evaluates_in_scaled_variable() {
        let d = SpectralDesign::new(12, 3.0, 1e-10).unwrap();
        let (y, _) = d.sample(4, 2);
        let p = y.path();
        let x = 3.3;
        let direct: f64 = (1..=12)
            .map(|n| {
                let (a, b) = y.gaussians()[n];
                let (s, c) = (n as f64 * x / 12.5).sin_cos();
                y.amplitudes()[n] * (a * c + b * s)
            })
            .sum();
        assert!((p.eval(x).0 - direct).abs() < 1e-13);
    }
}
