pub mod joint;
pub mod estimates;
pub mod mollifier;

pub use joint::JointCovariance;
pub use estimates::{conditional_matrices, l2_closeness_report, mollified_cov, Which};
pub use mollifier::Mollifier;
