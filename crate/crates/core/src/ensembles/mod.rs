pub mod sinc;
pub mod spectral;
pub mod trig;

pub use sinc::{sample_sinc_path, SincProcessSampler};
pub use spectral::{coupled_spectral_paths, ScaledPath, SpectralDesign, SpectralProcess};
pub use trig::{eval_poly, sample_dunnage, sample_dunnage_trial, sample_qualls, sample_qualls_trial, Path, TrigPolynomial};
