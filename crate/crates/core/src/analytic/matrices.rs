use nalgebra::{Matrix2, Matrix4};

use crate::error::{Error, Result};

use super::covariance::CovarianceModel;

/// Covariance of `(X(t₁), X(t₂), X'(t₁), X'(t₂))` and its reduction.
///
/// `Σ = [[A, B], [Bᵗ, C]]`, `Ω = C - BᵗA⁻¹B = μ [[1, -ρ], [-ρ, 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrixBundle {
    pub sigma: Matrix4<f64>,
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub c: Matrix2<f64>,
    pub omega: Matrix2<f64>,
    pub mu: f64,
    pub rho: f64,
}

impl ConditionalMatrixBundle {
    /// Assemble from `(r, r', r'')` at the lag and `λ = -r''(0)`.
    pub fn from_triple(r: f64, r1: f64, r2: f64, lambda: f64) -> Result<Self> {
        let a = Matrix2::new(1.0, r, r, 1.0);
        let b = Matrix2::new(0.0, r1, -r1, 0.0);
        let c = Matrix2::new(lambda, -r2, -r2, lambda);
        let mut sigma = Matrix4::zeros();
        sigma.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
        sigma.fixed_view_mut::<2, 2>(0, 2).copy_from(&b);
        sigma.fixed_view_mut::<2, 2>(2, 0).copy_from(&b.transpose());
        sigma.fixed_view_mut::<2, 2>(2, 2).copy_from(&c);
        let a_inv = a
            .try_inverse()
            .ok_or_else(|| Error::invalid("value block singular: lag is a multiple of the period"))?;
        let omega = c - b.transpose() * a_inv * b;
        let mu = omega[(0, 0)];
        if !(mu > 0.0) {
            return Err(Error::invariant(format!("conditional derivative variance μ = {mu} not positive")));
        }
        let rho = -omega[(0, 1)] / mu;
        Ok(ConditionalMatrixBundle {
            sigma,
            a,
            b,
            c,
            omega,
            mu,
            rho,
        })
    }

    pub fn new(model: &CovarianceModel, t: f64) -> Result<Self> {
        let (r, r1, r2) = model.triple(t);
        Self::from_triple(r, r1, r2, model.lambda2())
    }

    /// `(1 - r²) μ² (1 - ρ²)`.
    pub fn det_factorized(&self) -> f64 {
        let r = self.a[(0, 1)];
        (1.0 - r * r) * self.mu * self.mu * (1.0 - self.rho * self.rho)
    }
}
