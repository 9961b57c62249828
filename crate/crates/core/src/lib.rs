//! High-dimensional multivariate time-series forecasting.
//!
//! The pipeline reshapes a wide table of labeled series into a
//! time x event x region cuboid, extracts features from each region's
//! time x event cross-section with a learned 2-D convolution bank
//! (optionally after a multi-head self-attention pass across regions),
//! fuses them through a shared MLP into direct multi-horizon forecasts,
//! and blends with a ridge VAR baseline. A walk-forward backtest harness
//! scores any forecaster with MASE and MSE under expanding- or
//! sliding-window protocols.
//!
//! Entry points:
//! - [`data`]: CSV ingestion, label schemas, synthetic generation
//! - [`tensor`]: panels, cuboids, slicing
//! - [`nn`]: differentiable blocks with explicit backward passes
//! - [`model`]: the cross-sectional network, Adam training, model files
//! - [`var`]: ridge vector autoregression
//! - [`metrics`] / [`ensemble`]: MASE, MSE, weighted blending
//! - [`backtest`] / [`report`]: walk-forward evaluation and reports

// Index loops mirror the math throughout the numeric code.
#![allow(clippy::needless_range_loop)]

pub mod backtest;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod forecasters;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod report;
pub mod rng;
pub mod tensor;
pub mod var;

pub use error::{CsError, Result};
