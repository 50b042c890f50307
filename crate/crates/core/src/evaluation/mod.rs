//! Rolling-window backtesting over the short/medium/long horizons, rank
//! aggregation across dataset × horizon cases, significance tests, and
//! Hurst-exponent profiling.

pub mod external;
pub mod hurst;
pub mod ranks;
pub mod significance;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use external::ExternalForecasts;
pub use hurst::{hurst_exponent, is_long_range_dependent, HurstMethod};
pub use ranks::{midranks, RankTable};
pub use significance::{
    friedman_chi2, friedman_iman, iman_f, mcb_analysis, mcb_from_mean_ranks, wilcoxon_signed_rank,
    Decision, McbAnalysis, McbInterval, TestResult, DEFAULT_ALPHA,
};

use crate::baselines::{fit_arnn_selected, rw_forecast, rwd_forecast, ArnnConfig};
use crate::error::{Error, Result};
use crate::ewnet::{
    conformal_interval, fit_ewnet, precontrol_interval, select_p, EwnetConfig, IntervalForecast,
    IntervalMethod, MIN_TRAIN_LEN,
};
use crate::metrics::{Metric, MetricSet};
use crate::seed::derive_seed;
use crate::series::{Frequency, SplitSpec, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizonKind {
    Short,
    Medium,
    Long,
}

impl HorizonKind {
    pub const ALL: [HorizonKind; 3] = [HorizonKind::Short, HorizonKind::Medium, HorizonKind::Long];

    pub fn name(self) -> &'static str {
        match self {
            HorizonKind::Short => "short",
            HorizonKind::Medium => "medium",
            HorizonKind::Long => "long",
        }
    }

    /// Test-window length for weekly and monthly data.
    pub fn standard_steps(self, frequency: Frequency) -> Option<usize> {
        let idx = self as usize;
        match frequency {
            Frequency::Weekly => Some([13, 26, 52][idx]),
            Frequency::Monthly => Some([3, 6, 12][idx]),
            Frequency::Unspecified => None,
        }
    }
}

impl std::str::FromStr for HorizonKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "short" => Ok(HorizonKind::Short),
            "medium" => Ok(HorizonKind::Medium),
            "long" => Ok(HorizonKind::Long),
            other => Err(Error::InvalidParameter(format!("unknown horizon `{other}`"))),
        }
    }
}

/// A named forecast horizon with its test-window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonSpec {
    pub kind: HorizonKind,
    pub steps: usize,
}

impl HorizonSpec {
    /// Weekly and monthly series must use the standard step counts.
    pub fn new(kind: HorizonKind, steps: usize, frequency: Frequency) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1 step".into()));
        }
        if let Some(expected) = kind.standard_steps(frequency) {
            if steps != expected {
                return Err(Error::InvalidParameter(format!(
                    "{} horizon for {frequency:?} data is {expected} steps, got {steps}",
                    kind.name()
                )));
            }
        }
        Ok(Self { kind, steps })
    }

    pub fn standard(kind: HorizonKind, frequency: Frequency) -> Result<Self> {
        let steps = kind.standard_steps(frequency).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "series without weekly/monthly frequency needs an explicit step count for the {} horizon",
                kind.name()
            ))
        })?;
        Ok(Self { kind, steps })
    }
}

/// A model taking part in the comparison.
#[derive(Debug, Clone)]
pub enum Forecaster {
    Ewnet,
    RandomWalk,
    RandomWalkDrift,
    Arnn,
    /// Forecasts read from elsewhere, looked up by dataset and step count.
    External(Arc<ExternalForecasts>),
}

impl Forecaster {
    pub fn name(&self) -> &str {
        match self {
            Forecaster::Ewnet => "EWNet",
            Forecaster::RandomWalk => "RW",
            Forecaster::RandomWalkDrift => "RWD",
            Forecaster::Arnn => "ARNN",
            Forecaster::External(ext) => &ext.name,
        }
    }

    /// The built-in forecasters.
    pub fn builtin() -> Vec<Forecaster> {
        vec![
            Forecaster::Ewnet,
            Forecaster::RandomWalk,
            Forecaster::RandomWalkDrift,
            Forecaster::Arnn,
        ]
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ewnet" => Ok(Forecaster::Ewnet),
            "rw" => Ok(Forecaster::RandomWalk),
            "rwd" => Ok(Forecaster::RandomWalkDrift),
            "arnn" => Ok(Forecaster::Arnn),
            other => Err(Error::InvalidParameter(format!("unknown forecaster `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub ewnet: EwnetConfig,
    pub arnn: ArnnConfig,
    /// Level of the split-conformal interval attached to EWNet.
    pub conformal_level: f64,
    /// Overrides the training seeds of EWNet and ARNN.
    pub seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            ewnet: EwnetConfig::default(),
            arnn: ArnnConfig::default(),
            conformal_level: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterResult {
    pub name: String,
    pub point: Vec<f64>,
    pub metrics: MetricSet,
    /// Selected lag order for the neural forecasters.
    pub chosen_p: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub method: IntervalMethod,
    pub nominal_level: f64,
    pub half_width: f64,
    pub coverage: f64,
}

impl CoverageRecord {
    fn from_interval(iv: &IntervalForecast, actual: &[f64]) -> Result<Self> {
        Ok(Self {
            method: iv.method,
            nominal_level: iv.nominal_level,
            half_width: iv.upper[0] - iv.point[0],
            coverage: iv.coverage(actual)?,
        })
    }
}

/// Outcome of one dataset × horizon cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub horizon: HorizonSpec,
    pub split: SplitSpec,
    pub seed: u64,
    pub actual: Vec<f64>,
    pub results: Vec<ForecasterResult>,
    /// EWNet interval coverage on the test window.
    pub intervals: Vec<CoverageRecord>,
}

impl EvaluationReport {
    /// Row label used in rank tables.
    pub fn case_label(&self) -> String {
        format!("{}/{}", self.dataset, self.horizon.kind.name())
    }

    pub fn score(&self, name: &str, metric: Metric) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.metrics.get(metric))
    }
}

struct Windows<'a> {
    train: &'a [f64],
    val: &'a [f64],
    train_val: &'a [f64],
    steps: usize,
}

struct Produced {
    point: Vec<f64>,
    chosen_p: Option<usize>,
    intervals: Vec<IntervalForecast>,
}

impl Produced {
    fn point(point: Vec<f64>) -> Self {
        Self {
            point,
            chosen_p: None,
            intervals: Vec::new(),
        }
    }
}

fn run_ewnet(w: &Windows, cfg: &EvaluationConfig) -> Result<Produced> {
    let mut ecfg = cfg.ewnet.clone();
    ecfg.horizon = w.steps;
    ecfg.train.seed = cfg.seed;
    let p = select_p(w.train, w.val, &ecfg)?.p;
    let final_model = fit_ewnet(w.train_val, p, &ecfg)?;
    let point = final_model.forecast(w.steps)?;

    let mut intervals = vec![precontrol_interval(&point, &final_model.residuals()?)?];
    // calibrate on one-step errors over the validation window of the
    // model that was fitted on the training window during selection
    let selection_model = fit_ewnet(w.train, p, &ecfg)?;
    let calibration = selection_model.rolling_one_step_errors(w.val)?;
    match conformal_interval(&point, &calibration, cfg.conformal_level) {
        Ok(iv) => intervals.push(iv),
        Err(e) => log::warn!("conformal interval skipped: {e}"),
    }
    Ok(Produced {
        point,
        chosen_p: Some(p),
        intervals,
    })
}

fn run_forecaster(f: &Forecaster, dataset: &str, w: &Windows, cfg: &EvaluationConfig) -> Result<Produced> {
    match f {
        Forecaster::Ewnet => run_ewnet(w, cfg),
        Forecaster::RandomWalk => rw_forecast(w.train_val, w.steps).map(Produced::point),
        Forecaster::RandomWalkDrift => rwd_forecast(w.train_val, w.steps).map(Produced::point),
        Forecaster::Arnn => {
            let mut acfg = cfg.arnn.clone();
            acfg.train.seed = derive_seed(cfg.seed, 1);
            let fit = fit_arnn_selected(w.train, w.val, w.train_val, &acfg)?;
            Ok(Produced {
                point: fit.model.forecast_recursive(w.train_val, w.steps)?,
                chosen_p: Some(fit.p),
                intervals: Vec::new(),
            })
        }
        Forecaster::External(ext) => ext
            .get(dataset, w.steps)
            .map(|p| Produced::point(p.to_vec()))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "external forecasts `{}` have no {}-step entry for dataset `{dataset}`",
                    ext.name, w.steps
                ))
            }),
    }
}

/// Backtest `forecasters` on one series and horizon.
///
/// The series is split into train / validation (2·steps) / test (steps).
/// Lag orders are selected on the validation window with models fitted on
/// the training window; final models are refit on train + validation and
/// forecast the test window. EWNet also gets a pre-control interval from its
/// in-sample residuals and a split-conformal interval calibrated on one-step
/// validation errors.
pub fn rolling_evaluate(
    dataset: &str,
    series: &TimeSeries,
    horizon: HorizonSpec,
    forecasters: &[Forecaster],
    cfg: &EvaluationConfig,
) -> Result<EvaluationReport> {
    if forecasters.is_empty() {
        return Err(Error::InvalidParameter("no forecasters to evaluate".into()));
    }
    let steps = horizon.steps;
    let needed = 3 * steps + MIN_TRAIN_LEN;
    if series.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: series.len(),
        });
    }
    let split = SplitSpec::for_horizon(series.len(), steps)?;
    let values = series.values();
    let (train, val, test) = split.slices(values)?;
    let windows = Windows {
        train,
        val,
        train_val: &values[..split.train_len + split.val_len],
        steps,
    };
    let produced = forecasters
        .par_iter()
        .map(|f| run_forecaster(f, dataset, &windows, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut results = Vec::with_capacity(forecasters.len());
    let mut intervals = Vec::new();
    for (f, out) in forecasters.iter().zip(produced) {
        let metrics = MetricSet::compute(test, &out.point, windows.train_val, cfg.ewnet.seasonal_lag)?;
        for iv in &out.intervals {
            intervals.push(CoverageRecord::from_interval(iv, test)?);
        }
        results.push(ForecasterResult {
            name: f.name().to_string(),
            point: out.point,
            metrics,
            chosen_p: out.chosen_p,
        });
    }
    Ok(EvaluationReport {
        dataset: dataset.to_string(),
        horizon,
        split,
        seed: cfg.seed,
        actual: test.to_vec(),
        results,
        intervals,
    })
}

/// One dataset × horizon cell of a comparison.
#[derive(Debug, Clone)]
pub struct EvaluationCell {
    pub dataset: String,
    pub series: TimeSeries,
    pub horizon: HorizonSpec,
}

/// Evaluate every cell in parallel; reports come back in cell order.
pub fn evaluate_cells(
    cells: &[EvaluationCell],
    forecasters: &[Forecaster],
    cfg: &EvaluationConfig,
) -> Result<Vec<EvaluationReport>> {
    cells
        .par_iter()
        .map(|c| rolling_evaluate(&c.dataset, &c.series, c.horizon, forecasters, cfg))
        .collect()
}

/// Rank the forecasters within every report on `metric`.
pub fn rank_table(reports: &[EvaluationReport], metric: Metric) -> Result<RankTable> {
    let first = reports.first().ok_or(Error::EmptySeries)?;
    let models: Vec<String> = first.results.iter().map(|r| r.name.clone()).collect();
    let mut scores = Vec::with_capacity(reports.len());
    for rep in reports {
        let names: Vec<&str> = rep.results.iter().map(|r| r.name.as_str()).collect();
        if names != models.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(format!(
                "case {} compares a different set of models",
                rep.case_label()
            )));
        }
        scores.push(rep.results.iter().map(|r| r.metrics.get(metric)).collect());
    }
    let cases = reports.iter().map(EvaluationReport::case_label).collect();
    RankTable::from_scores(metric.name(), models, cases, &scores)
}

/// Omnibus and post-hoc tests on one metric's rank table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub mean_ranks: Vec<(String, f64)>,
    pub friedman: TestResult,
    pub iman: TestResult,
    pub mcb: McbAnalysis,
    /// Wilcoxon signed-rank tests of the best-ranked model against each other
    /// model on per-case ranks; `None` where too few cases differ.
    pub wilcoxon: Vec<(String, Option<TestResult>)>,
}

/// Friedman, Iman–Davenport, MCB and pairwise Wilcoxon tests on one table.
/// `mcb_q` replaces the computed studentized-range constant when given.
pub fn compare(ranks: &RankTable, alpha: f64, mcb_q: Option<f64>) -> Result<MetricComparison> {
    let (friedman, iman) = friedman_iman(ranks)?;
    let friedman = friedman.at_alpha(alpha);
    let iman = iman.at_alpha(alpha);
    let mcb = mcb_from_mean_ranks(&ranks.models, &ranks.mean_ranks(), ranks.n_cases(), alpha, mcb_q)?;
    let best = ranks
        .models
        .iter()
        .position(|m| *m == mcb.best)
        .expect("best model comes from the table");
    let column = |j: usize| ranks.ranks.iter().map(|row| row[j]).collect::<Vec<_>>();
    let wilcoxon = (0..ranks.n_models())
        .filter(|&j| j != best)
        .map(|j| {
            let test = wilcoxon_signed_rank(&column(best), &column(j), alpha).ok();
            (ranks.models[j].clone(), test)
        })
        .collect();
    Ok(MetricComparison {
        metric: ranks.metric.clone(),
        mean_ranks: ranks.models.iter().cloned().zip(ranks.mean_ranks()).collect(),
        friedman,
        iman,
        mcb,
        wilcoxon,
    })
}
