//! Scaling-law workbench for molecular language models: string codecs for
//! five molecular representations, token budgeting, power-law fitting,
//! compute-optimal frontiers and generation metrics.

// NaN-rejecting comparisons and index loops are deliberate in the numeric code
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod chem;
pub mod codecs;
pub mod frontier;
pub mod metrics;
pub mod plot;
pub mod report;
pub mod runlog;
pub mod scalar;
pub mod scaling;
pub mod tokenizer;

pub use scalar::Scalar;

pub type FitParams64 = scaling::FitParams<f64>;
pub type FitParams32 = scaling::FitParams<f32>;
pub type FrontierPoint64 = frontier::FrontierPoint<f64>;
pub type FrontierPoint32 = frontier::FrontierPoint<f32>;
pub type RhoFit64 = frontier::RhoFit<f64>;
pub type FitReport64 = scaling::FitReport<f64>;
