//! Rescaled-range (R/S) estimate of the Hurst exponent.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const MIN_HURST_LEN: usize = 32;
const MIN_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HurstMethod {
    /// Slope of `log(R/S)` against `log n`.
    RescaledRange,
    /// `0.5 +` slope of `log(R/S) − log E[R/S]`, with the Anis–Lloyd
    /// expectation for i.i.d. Gaussian data removing the small-window bias.
    #[default]
    AnisLloyd,
}

/// R/S of one window: range of the cumulative mean-adjusted sum (including
/// the empty prefix) over the population standard deviation.
fn rescaled_range(window: &[f64]) -> Option<f64> {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        return None;
    }
    let (mut acc, mut lo, mut hi) = (0.0f64, 0.0f64, 0.0f64);
    for v in window {
        acc += v - mean;
        lo = lo.min(acc);
        hi = hi.max(acc);
    }
    Some((hi - lo) / var.sqrt())
}

/// Anis–Lloyd expected R/S for `n` i.i.d. Gaussian observations.
pub fn expected_rescaled_range(n: usize) -> f64 {
    let nf = n as f64;
    let gamma_ratio = (ln_gamma((nf - 1.0) / 2.0) - ln_gamma(nf / 2.0)).exp() / std::f64::consts::PI.sqrt();
    gamma_ratio * (1..n).map(|i| ((nf - i as f64) / i as f64).sqrt()).sum::<f64>()
}

/// Dyadic window sizes from 8 to `N/4` (to `N/2` for short series so that
/// at least two sizes are used).
fn window_sizes(n: usize) -> Vec<usize> {
    let upto = |max: usize| {
        std::iter::successors(Some(MIN_WINDOW), |w| Some(w * 2))
            .take_while(|&w| w <= max)
            .collect::<Vec<_>>()
    };
    let sizes = upto(n / 4);
    if sizes.len() >= 2 {
        sizes
    } else {
        upto(n / 2)
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Hurst exponent by R/S over dyadic windows; windows of each size start
/// every half window. Zero-variance windows are skipped.
pub fn hurst_exponent(series: &[f64], method: HurstMethod) -> Result<f64> {
    if series.len() < MIN_HURST_LEN {
        return Err(Error::TooShort {
            needed: MIN_HURST_LEN,
            got: series.len(),
        });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i + 1 });
    }
    let mut log_n = Vec::new();
    let mut log_rs = Vec::new();
    for w in window_sizes(series.len()) {
        let step = w / 2;
        let vals: Vec<f64> = (0..=series.len() - w)
            .step_by(step)
            .filter_map(|start| rescaled_range(&series[start..start + w]))
            .collect();
        if vals.is_empty() {
            continue;
        }
        let mean_rs = vals.iter().sum::<f64>() / vals.len() as f64;
        log_n.push((w as f64).ln());
        log_rs.push(match method {
            HurstMethod::RescaledRange => mean_rs.ln(),
            HurstMethod::AnisLloyd => mean_rs.ln() - expected_rescaled_range(w).ln(),
        });
    }
    if log_n.len() < 2 {
        return Err(Error::Numeric(
            "fewer than two window sizes with non-zero variance".into(),
        ));
    }
    let b = slope(&log_n, &log_rs);
    Ok(match method {
        HurstMethod::RescaledRange => b,
        HurstMethod::AnisLloyd => 0.5 + b,
    })
}

/// Margin above 0.5 beyond which a series is reported as long-range dependent.
pub const LRD_MARGIN: f64 = 0.05;

pub fn is_long_range_dependent(h: f64) -> bool {
    h > 0.5 + LRD_MARGIN
}
