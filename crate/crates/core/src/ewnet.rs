//! Ensemble wavelet neural network (EWNet).
//!
//! The training series is split by a Haar MODWT into `J + 1` additive
//! components; an ARNN(p, k) is fitted to each, each component is extended
//! recursively on its own, and the component forecasts are summed. The lag
//! order `p` is chosen on a validation window and the hidden width follows
//! `k = ⌊(p + 1) / 2⌋`.
//!
//! The components are either the MRA details and smooth, or the Haar
//! wavelet and scaling coefficients themselves (see [`ComponentForm`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metrics::{self, Metric};
use crate::neuralnet::{fit_network, hidden_neurons, NeuralNetModel, TrainConfig};
use crate::seed::derive_seed;
use crate::wavelet::{haar_filter, modwt_forward, WaveletDecomposition};

/// Minimum training length for which the default level rule yields `J >= 1`.
pub const MIN_TRAIN_LEN: usize = 8;

/// Number of detail levels `J` for a training series of length `n`, from
/// `J + 1 = ⌊ln n⌋`.
pub fn default_levels(n: usize) -> Result<usize> {
    if n < MIN_TRAIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_TRAIN_LEN,
            got: n,
        });
    }
    Ok((n as f64).ln().floor() as usize - 1)
}

/// Inclusive range of candidate lag orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagGrid {
    pub min: usize,
    pub max: usize,
}

impl LagGrid {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min == 0 || max < min {
            return Err(Error::InvalidParameter(format!("invalid lag grid {min}-{max}")));
        }
        Ok(Self { min, max })
    }

    pub fn single(p: usize) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.min..=self.max
    }
}

impl Default for LagGrid {
    fn default() -> Self {
        Self { min: 1, max: 20 }
    }
}

impl std::str::FromStr for LagGrid {
    type Err = Error;

    /// Accepts `"a-b"` or a single `"p"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse lag grid `{s}`"));
        match s.split_once('-') {
            Some((a, b)) => Self::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => Self::single(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

impl std::fmt::Display for LagGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.min, self.max)
    }
}

/// Which additive Haar components the networks are fitted to.
///
/// Both sum to the original series. MRA details and smooth at time `t` are
/// built from observations after `t` as well, which under the periodic
/// boundary wraps the start of the series into the last values the networks
/// extrapolate from. The Haar coefficients `W_1 .. W_J, V_J` use past
/// observations only and are the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentForm {
    Mra,
    #[default]
    Coefficients,
}

impl std::str::FromStr for ComponentForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mra" => Ok(ComponentForm::Mra),
            "coefficients" => Ok(ComponentForm::Coefficients),
            other => Err(Error::InvalidParameter(format!("unknown component form `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EwnetConfig {
    /// Detail levels `J`; `None` applies [`default_levels`] to the training length.
    pub levels: Option<usize>,
    pub components: ComponentForm,
    pub p_grid: LagGrid,
    pub selection_metric: Metric,
    pub horizon: usize,
    pub seasonal_lag: usize,
    pub train: TrainConfig,
}

impl Default for EwnetConfig {
    fn default() -> Self {
        Self {
            levels: None,
            components: ComponentForm::default(),
            p_grid: LagGrid::default(),
            selection_metric: Metric::Mase,
            horizon: 1,
            seasonal_lag: 1,
            train: TrainConfig::default(),
        }
    }
}

impl EwnetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if !matches!(self.selection_metric, Metric::Mase | Metric::Smape) {
            return Err(Error::InvalidParameter(format!(
                "selection metric must be mase or smape, got {}",
                self.selection_metric
            )));
        }
        if self.seasonal_lag == 0 {
            return Err(Error::InvalidParameter("seasonal lag must be >= 1".into()));
        }
        if self.levels == Some(0) {
            return Err(Error::InvalidParameter("levels must be >= 1".into()));
        }
        LagGrid::new(self.p_grid.min, self.p_grid.max)?;
        self.train.validate()
    }

    fn levels_for(&self, n: usize) -> Result<usize> {
        match self.levels {
            Some(j) => Ok(j),
            None => default_levels(n),
        }
    }
}

/// A fitted EWNet(p, k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwnetModel {
    pub decomposition: WaveletDecomposition,
    /// One network per detail level, then one for the smooth.
    pub component_models: Vec<NeuralNetModel>,
    pub chosen_p: usize,
    pub chosen_k: usize,
    pub config: EwnetConfig,
}

impl EwnetModel {
    fn new(
        decomposition: WaveletDecomposition,
        component_models: Vec<NeuralNetModel>,
        chosen_p: usize,
        config: EwnetConfig,
    ) -> Self {
        let chosen_k = hidden_neurons(chosen_p);
        assert_eq!(component_models.len(), decomposition.levels + 1);
        assert!(component_models.iter().all(|m| m.p == chosen_p && m.k == chosen_k));
        Self {
            decomposition,
            component_models,
            chosen_p,
            chosen_k,
            config,
        }
    }

    pub fn levels(&self) -> usize {
        self.decomposition.levels
    }

    pub fn train_len(&self) -> usize {
        self.decomposition.len()
    }

    /// The series the component networks were fitted to, in model order.
    pub fn component_series(&self) -> Vec<&[f64]> {
        components_of(&self.decomposition, self.config.components)
    }

    /// Check structural invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.component_models.len() != self.decomposition.levels + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} component models, found {}",
                self.decomposition.levels + 1,
                self.component_models.len()
            )));
        }
        if self.chosen_k != hidden_neurons(self.chosen_p) {
            return Err(Error::InvalidParameter(format!(
                "hidden width {} does not match p = {}",
                self.chosen_k, self.chosen_p
            )));
        }
        if self.decomposition.details.len() != self.decomposition.levels {
            return Err(Error::InvalidParameter("decomposition is missing details".into()));
        }
        let n = self.train_len();
        if self.component_series().iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("component series lengths differ".into()));
        }
        for m in &self.component_models {
            if m.p != self.chosen_p || m.k != self.chosen_k {
                return Err(Error::InvalidParameter("component network shape mismatch".into()));
            }
        }
        Ok(())
    }

    /// `h`-step forecast: each component is extended recursively by its own
    /// network and the component paths are summed.
    pub fn forecast(&self, h: usize) -> Result<Vec<f64>> {
        let paths = self
            .component_series()
            .into_iter()
            .zip(&self.component_models)
            .map(|(series, model)| model.forecast_recursive(series, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(sum_paths(&paths, h))
    }

    /// In-sample one-step fit for training indices `p..N`, the pointwise
    /// sum of the component fits.
    pub fn fitted_values(&self) -> Result<Vec<f64>> {
        let fits = self
            .component_series()
            .into_iter()
            .zip(&self.component_models)
            .map(|(series, model)| model.fitted_values(series))
            .collect::<Result<Vec<_>>>()?;
        Ok(sum_paths(&fits, self.train_len() - self.chosen_p))
    }

    /// In-sample residuals `fit - actual` on the training window.
    pub fn residuals(&self) -> Result<Vec<f64>> {
        let train = crate::wavelet::mra_reconstruct(&self.decomposition)?;
        let fit = self.fitted_values()?;
        Ok(fit
            .iter()
            .zip(&train[self.chosen_p..])
            .map(|(f, y)| f - y)
            .collect())
    }

    /// One-step forecast of the value following `history`, re-decomposing the
    /// history with the fitted level count and applying the fitted networks.
    pub fn one_step_ahead(&self, history: &[f64]) -> Result<f64> {
        if history.len() < self.chosen_p.max(2) {
            return Err(Error::TooShort {
                needed: self.chosen_p.max(2),
                got: history.len(),
            });
        }
        let dec = modwt_forward(history, self.levels(), &haar_filter())?;
        let mut total = 0.0;
        for (series, model) in components_of(&dec, self.config.components)
            .into_iter()
            .zip(&self.component_models)
        {
            total += model.forecast_one(&series[series.len() - self.chosen_p..])?;
        }
        Ok(total)
    }

    /// One-step errors `forecast - actual` over `future`, each made from the
    /// training series extended by the preceding observations of `future`.
    pub fn rolling_one_step_errors(&self, future: &[f64]) -> Result<Vec<f64>> {
        let mut history = crate::wavelet::mra_reconstruct(&self.decomposition)?;
        let mut errors = Vec::with_capacity(future.len());
        for &y in future {
            errors.push(self.one_step_ahead(&history)? - y);
            history.push(y);
        }
        Ok(errors)
    }
}

fn components_of(dec: &WaveletDecomposition, form: ComponentForm) -> Vec<&[f64]> {
    match form {
        ComponentForm::Mra => dec.components().collect(),
        ComponentForm::Coefficients => dec.coefficient_components().collect(),
    }
}

fn sum_paths(paths: &[Vec<f64>], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for path in paths {
        for (o, v) in out.iter_mut().zip(path) {
            *o += v;
        }
    }
    out
}

/// Fit EWNet with a fixed lag order `p` on `train`.
///
/// Component `c` trains with seed `derive_seed(cfg.train.seed, c)`.
pub fn fit_ewnet(train: &[f64], p: usize, cfg: &EwnetConfig) -> Result<EwnetModel> {
    cfg.validate()?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let levels = cfg.levels_for(train.len())?;
    if train.len() < MIN_TRAIN_LEN.max(p + 2) {
        return Err(Error::TooShort {
            needed: MIN_TRAIN_LEN.max(p + 2),
            got: train.len(),
        });
    }
    let decomposition = modwt_forward(train, levels, &haar_filter())?;
    let k = hidden_neurons(p);
    let components = components_of(&decomposition, cfg.components);
    let models = components
        .par_iter()
        .enumerate()
        .map(|(c, series)| {
            let tc = cfg.train.with_seed(derive_seed(cfg.train.seed, c as u64));
            fit_network(series, p, k, &tc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EwnetModel::new(decomposition, models, p, cfg.clone()))
}

/// Convenience wrapper for [`EwnetModel::forecast`].
pub fn forecast_ewnet(model: &EwnetModel, h: usize) -> Result<Vec<f64>> {
    model.forecast(h)
}

/// Validation score of every feasible grid candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub p: usize,
    pub scores: Vec<(usize, f64)>,
}

/// Score a validation forecast. MASE with a constant training series has
/// no scale; candidates then rank by MAE, which orders them identically
/// because the scale is shared.
pub fn validation_score(
    metric: Metric,
    val: &[f64],
    forecast: &[f64],
    train: &[f64],
    seasonal_lag: usize,
) -> Result<f64> {
    match metric {
        Metric::Mase => match metrics::mase(val, forecast, train, seasonal_lag) {
            Err(Error::UndefinedMase) => metrics::mae(val, forecast),
            other => other,
        },
        Metric::Smape => metrics::smape(val, forecast),
        Metric::Rmse => metrics::rmse(val, forecast),
        Metric::Mae => metrics::mae(val, forecast),
    }
}

/// Smallest score wins; ties go to the smaller lag order.
pub fn argmin_lag(scores: &[(usize, f64)]) -> Option<usize> {
    scores
        .iter()
        .filter(|(_, s)| s.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(p, _)| *p)
}

/// Grid search shared by EWNet and the plain ARNN baseline: for every lag
/// order in `grid`, `forecast_with(p)` must return `val.len()` forecasts from
/// a model fitted on `train`. Infeasible candidates are skipped.
pub fn select_lag<F>(
    grid: LagGrid,
    train: &[f64],
    val: &[f64],
    metric: Metric,
    seasonal_lag: usize,
    forecast_with: F,
) -> Result<LagSelection>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    if val.is_empty() {
        return Err(Error::InvalidParameter("validation window is empty".into()));
    }
    let candidates: Vec<usize> = grid.iter().collect();
    let scored: Vec<Option<(usize, f64)>> = candidates
        .par_iter()
        .map(|&p| {
            let attempt = forecast_with(p)
                .and_then(|f| validation_score(metric, val, &f, train, seasonal_lag));
            match attempt {
                Ok(score) if score.is_finite() => Some((p, score)),
                Ok(_) => None,
                Err(e) => {
                    log::debug!("lag {p} infeasible: {e}");
                    None
                }
            }
        })
        .collect();
    let scores: Vec<(usize, f64)> = scored.into_iter().flatten().collect();
    let p = argmin_lag(&scores).ok_or_else(|| {
        Error::InvalidParameter(format!("no feasible lag order in grid {grid}"))
    })?;
    Ok(LagSelection { p, scores })
}

/// Choose `p` by fitting EWNet on `train` for each grid value and scoring
/// the `|val|`-step forecast against `val`.
pub fn select_p(train: &[f64], val: &[f64], cfg: &EwnetConfig) -> Result<LagSelection> {
    cfg.validate()?;
    select_lag(cfg.p_grid, train, val, cfg.selection_metric, cfg.seasonal_lag, |p| {
        fit_ewnet(train, p, cfg)?.forecast(val.len())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMethod {
    Precontrol,
    Conformal,
}

impl IntervalMethod {
    pub fn name(self) -> &'static str {
        match self {
            IntervalMethod::Precontrol => "precontrol",
            IntervalMethod::Conformal => "conformal",
        }
    }
}

impl std::str::FromStr for IntervalMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "precontrol" => Ok(IntervalMethod::Precontrol),
            "conformal" => Ok(IntervalMethod::Conformal),
            other => Err(Error::InvalidParameter(format!("unknown interval method `{other}`"))),
        }
    }
}

/// Point forecasts with symmetric bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalForecast {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub method: IntervalMethod,
    pub nominal_level: f64,
}

impl IntervalForecast {
    fn symmetric(point: &[f64], half_width: f64, method: IntervalMethod, nominal_level: f64) -> Self {
        Self {
            lower: point.iter().map(|p| p - half_width).collect(),
            upper: point.iter().map(|p| p + half_width).collect(),
            point: point.to_vec(),
            method,
            nominal_level,
        }
    }

    /// Fraction of `actual` inside `[lower, upper]`.
    pub fn coverage(&self, actual: &[f64]) -> Result<f64> {
        if actual.len() != self.point.len() || actual.is_empty() {
            return Err(Error::LengthMismatch {
                expected: self.point.len(),
                got: actual.len(),
            });
        }
        let inside = actual
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(y, (lo, hi))| (*lo..=*hi).contains(y))
            .count();
        Ok(inside as f64 / actual.len() as f64)
    }
}

/// Multiplier of the residual standard deviation for pre-control limits.
pub const PRECONTROL_SIGMAS: f64 = 1.5;

/// `point ± 1.5 σ` with `σ` the sample standard deviation of `residuals`.
pub fn precontrol_interval(point: &[f64], residuals: &[f64]) -> Result<IntervalForecast> {
    if residuals.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: residuals.len(),
        });
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    let sigma = var.sqrt();
    let normal = Normal::standard();
    let nominal = normal.cdf(PRECONTROL_SIGMAS) - normal.cdf(-PRECONTROL_SIGMAS);
    Ok(IntervalForecast::symmetric(
        point,
        PRECONTROL_SIGMAS * sigma,
        IntervalMethod::Precontrol,
        nominal,
    ))
}

/// Split-conformal half-width: the `⌈(n + 1) level⌉`-th smallest absolute
/// calibration residual.
pub fn conformal_quantile(calibration_abs_residuals: &[f64], level: f64) -> Result<f64> {
    let n = calibration_abs_residuals.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("level {level} outside (0, 1)")));
    }
    // guard against (n + 1) * level landing a hair above an integer
    let rank = (((n + 1) as f64) * level - 1e-9).ceil().max(1.0) as usize;
    if rank > n {
        return Err(Error::InvalidParameter(format!(
            "level {level} needs at least {} calibration residuals, got {n}",
            (level / (1.0 - level)).ceil() as usize
        )));
    }
    let mut sorted: Vec<f64> = calibration_abs_residuals.iter().map(|r| r.abs()).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[rank - 1])
}

pub fn conformal_interval(
    point: &[f64],
    calibration_abs_residuals: &[f64],
    level: f64,
) -> Result<IntervalForecast> {
    let q = conformal_quantile(calibration_abs_residuals, level)?;
    Ok(IntervalForecast::symmetric(point, q, IntervalMethod::Conformal, level))
}
