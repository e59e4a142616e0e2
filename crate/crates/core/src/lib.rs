//! Zero counts of random trigonometric polynomials: exact Kac-Rice moments,
//! the scaling limit, mollified comparison processes and Monte Carlo checks.

pub mod analytic;
pub mod dd;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod mollify;
pub mod moments3;
pub mod quadrature;
pub mod rng;
pub mod scaling;
pub mod series;
pub mod zeros;

pub use error::{Error, Result};
