//! Bivariate power-law fitting of loss against parameters and tokens.

mod fit;
mod law;

pub use fit::{fit_bivariate, select_observations, FitConfig, FitDiagnostics, FitError, FitReport};
pub use law::{error_stats, fit_errors, predict_loss, residuals, FitParams, LawError, RunObservation};
