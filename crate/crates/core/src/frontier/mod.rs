//! Compute-optimal allocation under `C = P * D`, the iso-curves around it,
//! and summaries of how the optimum moves with compute.

mod curves;
mod envelope;
mod optimum;
pub mod published;
mod rho;

pub use curves::{isoflop_curve, isoloss_curve, IsoFlopPoint, IsoLoss, IsoLossPoint};
pub use envelope::{min_loss_envelope, EnvelopeGrid, EnvelopePoint, Trajectory};
pub use optimum::{
    d_opt, frontier, frontier_derivative, l_opt, log_space, numeric_frontier, p_opt, rho_opt, FrontierPoint,
};
pub use rho::{fit_rho_powerlaw, RhoFit};

use crate::scaling::LawError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrontierError {
    #[error(transparent)]
    Params(#[from] LawError),
    #[error("compute must be positive and finite, got {0}")]
    NonPositiveCompute(f64),
    #[error("target loss {target} is not above the loss floor {floor}")]
    InfeasibleTarget { target: f64, floor: f64 },
    #[error("need at least two distinct compute values")]
    TooFewPoints,
    #[error("point {index} has a non-positive coordinate")]
    NonPositivePoint { index: usize },
    #[error("minimum not bracketed in ln P over [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("no trajectories")]
    EmptyEnvelope,
    #[error("invalid compute range [{0}, {1}] with {2} levels")]
    BadRange(f64, f64, usize),
}

/// Token span covered by single-epoch training runs; points whose implied
/// token count falls outside are extrapolations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Coverage {
    pub d_min: f64,
    pub d_max: f64,
}

impl Coverage {
    pub fn contains(&self, d: f64) -> bool {
        d >= self.d_min && d <= self.d_max
    }
}
