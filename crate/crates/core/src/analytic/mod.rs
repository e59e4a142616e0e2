pub mod covariance;
pub mod kac_rice;
pub mod matrices;

pub use covariance::{CovarianceKind, CovarianceModel};
pub use kac_rice::{expected_zeros, lambda2, variance_exact, variance_interval, VarianceReport};
pub use matrices::ConditionalMatrixBundle;
