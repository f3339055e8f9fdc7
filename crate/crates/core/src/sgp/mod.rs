//! Sparse Gaussian process regression (FITC) with a squared-exponential
//! kernel, one model per output channel.

mod artifact;
mod exact;
mod fitc;
mod kernel;
mod train;

pub use artifact::{ModelArtifact, FORMAT as MODEL_FORMAT};
pub use exact::{exact_equivalence_gap, ExactGp};
pub use fitc::{fitc_log_marginal_likelihood, FitcModel, TrainingSummary, NOISE_FLOOR};
pub use kernel::KernelParams;
pub use train::{default_inducing_count, fit, fit_channel, select_inducing, FitConfig};
