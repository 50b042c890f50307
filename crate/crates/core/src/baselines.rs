//! Reference forecasters: random walk, random walk with drift, and a plain
//! (non-wavelet) ARNN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ewnet::{select_lag, LagGrid};
use crate::metrics::Metric;
use crate::neuralnet::{fit_network, hidden_neurons, NeuralNetModel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineMethod {
    #[serde(rename = "RW")]
    RandomWalk,
    #[serde(rename = "RWD")]
    RandomWalkDrift,
    #[serde(rename = "ARNN")]
    Arnn,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::RandomWalk => "RW",
            BaselineMethod::RandomWalkDrift => "RWD",
            BaselineMethod::Arnn => "ARNN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineForecast {
    pub method: BaselineMethod,
    pub point: Vec<f64>,
}

fn check_horizon(h: usize) -> Result<()> {
    if h == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    Ok(())
}

/// `h` copies of the last observation.
pub fn rw_forecast(train: &[f64], h: usize) -> Result<Vec<f64>> {
    check_horizon(h)?;
    let last = *train.last().ok_or(Error::EmptySeries)?;
    Ok(vec![last; h])
}

/// `y_N + i d` with `d = (y_N - y_1) / (N - 1)`.
pub fn rwd_forecast(train: &[f64], h: usize) -> Result<Vec<f64>> {
    check_horizon(h)?;
    if train.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: train.len(),
        });
    }
    let n = train.len();
    let last = train[n - 1];
    let drift = (last - train[0]) / (n - 1) as f64;
    Ok((1..=h).map(|i| last + i as f64 * drift).collect())
}

/// Settings for the standalone ARNN baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArnnConfig {
    pub p_grid: LagGrid,
    pub selection_metric: Metric,
    pub seasonal_lag: usize,
    pub train: TrainConfig,
}

impl Default for ArnnConfig {
    fn default() -> Self {
        Self {
            p_grid: LagGrid::default(),
            selection_metric: Metric::Mase,
            seasonal_lag: 1,
            train: TrainConfig::default(),
        }
    }
}

/// Fitted ARNN baseline with its selected lag order.
#[derive(Debug, Clone)]
pub struct ArnnFit {
    pub p: usize,
    pub model: NeuralNetModel,
}

/// Select `p` on `val` with a model fitted on `train`, then refit on
/// `refit_on` with the chosen order.
pub fn fit_arnn_selected(train: &[f64], val: &[f64], refit_on: &[f64], cfg: &ArnnConfig) -> Result<ArnnFit> {
    let selection = select_lag(cfg.p_grid, train, val, cfg.selection_metric, cfg.seasonal_lag, |p| {
        fit_network(train, p, hidden_neurons(p), &cfg.train)?.forecast_recursive(train, val.len())
    })?;
    let p = selection.p;
    let model = fit_network(refit_on, p, hidden_neurons(p), &cfg.train)?;
    Ok(ArnnFit { p, model })
}

/// Plain ARNN forecast fitted directly on `train`.
///
/// The lag order is chosen on a validation tail of `train` (its last
/// `min(h, ⌊N/4⌋)` values, at least one), after which the network is refit on
/// all of `train` and iterated `h` steps.
pub fn arnn_forecast(train: &[f64], h: usize, cfg: &ArnnConfig) -> Result<Vec<f64>> {
    check_horizon(h)?;
    if train.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: train.len(),
        });
    }
    let tail = h.min(train.len() / 4).max(1);
    let (fit_part, val) = train.split_at(train.len() - tail);
    let fit = fit_arnn_selected(fit_part, val, train, cfg)?;
    fit.model.forecast_recursive(train, h)
}
