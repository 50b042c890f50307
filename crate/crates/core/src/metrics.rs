//! Point-forecast accuracy measures: RMSE, MAE, MASE and sMAPE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four accuracy measures for one forecast window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub rmse: f64,
    pub mae: f64,
    pub mase: f64,
    /// On the 0–200 scale.
    pub smape: f64,
}

impl MetricSet {
    pub fn compute(actual: &[f64], forecast: &[f64], train: &[f64], seasonal_lag: usize) -> Result<Self> {
        Ok(Self {
            rmse: rmse(actual, forecast)?,
            mae: mae(actual, forecast)?,
            mase: mase(actual, forecast, train, seasonal_lag)?,
            smape: smape(actual, forecast)?,
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rmse => self.rmse,
            Metric::Mae => self.mae,
            Metric::Mase => self.mase,
            Metric::Smape => self.smape,
        }
    }
}

/// Selector for one of the accuracy measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Rmse,
    Mae,
    Mase,
    Smape,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Rmse, Metric::Mase, Metric::Mae, Metric::Smape];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Mae => "mae",
            Metric::Mase => "mase",
            Metric::Smape => "smape",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rmse" => Ok(Metric::Rmse),
            "mae" => Ok(Metric::Mae),
            "mase" => Ok(Metric::Mase),
            "smape" => Ok(Metric::Smape),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

fn check_pair(actual: &[f64], forecast: &[f64]) -> Result<()> {
    if actual.is_empty() {
        return Err(Error::EmptySeries);
    }
    if actual.len() != forecast.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            got: forecast.len(),
        });
    }
    Ok(())
}

pub fn rmse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_pair(actual, forecast)?;
    let sse: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| (a - f) * (a - f))
        .sum();
    Ok((sse / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_pair(actual, forecast)?;
    let sae: f64 = actual.iter().zip(forecast).map(|(a, f)| (a - f).abs()).sum();
    Ok(sae / actual.len() as f64)
}

/// Mean absolute error on the test window scaled by the in-sample
/// seasonal-naive MAE of `train` at lag `seasonal_lag`.
pub fn mase(actual: &[f64], forecast: &[f64], train: &[f64], seasonal_lag: usize) -> Result<f64> {
    check_pair(actual, forecast)?;
    if seasonal_lag == 0 {
        return Err(Error::InvalidParameter("seasonal lag must be >= 1".into()));
    }
    if train.len() <= seasonal_lag {
        return Err(Error::TooShort {
            needed: seasonal_lag + 1,
            got: train.len(),
        });
    }
    let scale = train
        .windows(seasonal_lag + 1)
        .map(|w| (w[seasonal_lag] - w[0]).abs())
        .sum::<f64>()
        / (train.len() - seasonal_lag) as f64;
    if scale == 0.0 {
        return Err(Error::UndefinedMase);
    }
    Ok(mae(actual, forecast)? / scale)
}

/// Symmetric MAPE on the 0–200 scale; a term with both values zero counts as 0.
pub fn smape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_pair(actual, forecast)?;
    let total: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| {
            let denom = a.abs() + f.abs();
            if denom == 0.0 {
                0.0
            } else {
                // |f - a| can round above |a| + |f| when the signs differ
                (200.0 * (f - a).abs() / denom).min(200.0)
            }
        })
        .sum();
    Ok(total / actual.len() as f64)
}
