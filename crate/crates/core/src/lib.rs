//! Epidemic time-series forecasting with an ensemble of autoregressive
//! neural networks fitted to MODWT multiresolution components, together with
//! baselines, accuracy metrics, rolling-window evaluation, prediction
//! intervals, and nonparametric model-comparison tests.

pub mod baselines;
pub mod error;
pub mod evaluation;
pub mod ewnet;
pub mod metrics;
pub mod neuralnet;
pub mod seed;
pub mod series;
pub mod wavelet;

pub use error::{Error, Result};
pub use series::{Frequency, SplitSpec, TimeSeries};
