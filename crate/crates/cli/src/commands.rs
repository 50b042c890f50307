use std::path::{Path, PathBuf};
use std::sync::Arc;

use epicast::evaluation::{
    compare, evaluate_cells, hurst_exponent, is_long_range_dependent, rank_table, EvaluationCell,
    EvaluationConfig, EvaluationReport, ExternalForecasts, Forecaster, HurstMethod, MetricComparison,
    RankTable,
};
use epicast::ewnet::{
    conformal_interval, default_levels, fit_ewnet, precontrol_interval, select_p, EwnetModel,
    IntervalMethod, LagSelection, MIN_TRAIN_LEN,
};
use epicast::metrics::Metric;
use epicast::wavelet::{haar_filter, modwt_forward, mra_reconstruct};
use epicast::Error;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{write_csv, write_json, Envelope, Provenance, SCHEMA_VERSION};
use crate::CliError;

#[derive(Serialize)]
struct DecompositionSummary {
    dataset: String,
    n: usize,
    levels: usize,
    filter: String,
    boundary: String,
    columns: Vec<String>,
    max_abs_reconstruction_error: f64,
}

pub fn decompose(cfg: &RunConfig) -> Result<(), CliError> {
    let data = cfg.primary_data()?;
    let series = data.load()?;
    let y = series.values();
    let levels = match cfg.model.levels {
        Some(j) => j,
        None => default_levels(y.len())?,
    };
    let dec = modwt_forward(y, levels, &haar_filter())?;
    let rec = mra_reconstruct(&dec)?;
    let max_err = rec.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut header = vec!["t".to_string()];
    header.extend((1..=levels).map(|j| format!("D{j}")));
    header.push(format!("S{levels}"));
    header.push("original".to_string());
    let rows: Vec<Vec<String>> = (0..y.len())
        .map(|t| {
            let mut row = vec![series
                .labels()
                .map_or_else(|| (t + 1).to_string(), |l| l[t].clone())];
            row.extend(dec.components().map(|c| c[t].to_string()));
            row.push(y[t].to_string());
            row
        })
        .collect();

    let prov = Provenance::new("decompose", cfg);
    let dir = cfg.output_dir();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&dir.join("decomposition.csv"), &prov, &header_refs, &rows)?;
    let summary = DecompositionSummary {
        dataset: data.display_name(),
        n: y.len(),
        levels,
        filter: dec.filter.clone(),
        boundary: "periodic".into(),
        columns: header,
        max_abs_reconstruction_error: max_err,
    };
    write_json(
        &dir.join("decomposition_summary.json"),
        &Envelope {
            provenance: &prov,
            payload: &summary,
        },
    )
}

/// Contents of `model.json`.
#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub dataset: String,
    pub n_obs: usize,
    pub chosen_p: usize,
    pub chosen_k: usize,
    pub selection: LagSelection,
    /// Absolute one-step errors on the validation window, for conformal intervals.
    pub calibration_abs_residuals: Vec<f64>,
    pub model: EwnetModel,
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let data = cfg.primary_data()?;
    let series = data.load()?;
    let y = series.values();
    let mut ecfg = cfg.model.clone();
    ecfg.train.seed = seed;
    let h = ecfg.horizon;
    let needed = 2 * h + MIN_TRAIN_LEN;
    if y.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: y.len(),
        }
        .into());
    }
    // the last 2h observations choose p; the final model uses everything
    let (train, val) = y.split_at(y.len() - 2 * h);
    let selection = select_p(train, val, &ecfg)?;
    let p = selection.p;
    let calibration = fit_ewnet(train, p, &ecfg)?.rolling_one_step_errors(val)?;
    let model = fit_ewnet(y, p, &ecfg)?;

    let file = ModelFile {
        provenance: Provenance::new("fit", cfg),
        dataset: data.display_name(),
        n_obs: y.len(),
        chosen_p: model.chosen_p,
        chosen_k: model.chosen_k,
        selection,
        calibration_abs_residuals: calibration.iter().map(|e| e.abs()).collect(),
        model,
    };
    write_json(&cfg.output_dir().join("model.json"), &file)
}

fn read_model(path: &Path) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid model file {}: {e}", path.display())))?;
    if file.provenance.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "model file {} has schema version {}, expected {SCHEMA_VERSION}",
            path.display(),
            file.provenance.schema_version
        )));
    }
    file.model.validate()?;
    Ok(file)
}

pub fn forecast(
    model_path: &Path,
    horizon: Option<usize>,
    interval: Option<IntervalMethod>,
    level: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let file = read_model(model_path)?;
    let mut cfg = file.provenance.config.clone();
    if let Some(h) = horizon {
        cfg.model.horizon = h;
    }
    if let Some(m) = interval {
        cfg.interval.method = m;
    }
    if let Some(l) = level {
        cfg.interval.level = l;
    }
    cfg.output_dir = out;
    cfg.validate()?;

    let point = file.model.forecast(cfg.model.horizon)?;
    let iv = match cfg.interval.method {
        IntervalMethod::Precontrol => precontrol_interval(&point, &file.model.residuals()?)?,
        IntervalMethod::Conformal => {
            conformal_interval(&point, &file.calibration_abs_residuals, cfg.interval.level)?
        }
    };
    let rows: Vec<Vec<String>> = (0..point.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                iv.point[i].to_string(),
                iv.lower[i].to_string(),
                iv.upper[i].to_string(),
                iv.method.name().to_string(),
            ]
        })
        .collect();
    let prov = Provenance::new("forecast", &cfg);
    write_csv(
        &cfg.output_dir().join("forecast.csv"),
        &prov,
        &["step", "point", "lower", "upper", "method"],
        &rows,
    )
}

#[derive(Serialize)]
struct EvaluationOutput {
    reports: Vec<EvaluationReport>,
    comparisons: Vec<MetricComparison>,
    /// Why the rank tests were not run, when they were not.
    comparisons_skipped: Option<String>,
}

fn rank_rows(table: &RankTable) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["case".to_string()];
    header.extend(table.models.iter().cloned());
    let rows = table
        .cases
        .iter()
        .zip(&table.ranks)
        .map(|(case, row)| {
            let mut r = vec![case.clone()];
            r.extend(row.iter().map(|v| v.to_string()));
            r
        })
        .collect();
    (header, rows)
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let data = cfg.all_data();
    if data.is_empty() {
        return Err(CliError::Config("no input data (--data or \"data\"/\"datasets\" in the config)".into()));
    }
    let mut forecasters = cfg
        .forecasters
        .iter()
        .map(|n| Forecaster::from_name(n))
        .collect::<Result<Vec<_>, _>>()?;
    for (name, path) in &cfg.external_forecasts {
        forecasters.push(Forecaster::External(Arc::new(ExternalForecasts::load(name, path)?)));
    }
    if forecasters.is_empty() {
        return Err(CliError::Config("no forecasters selected".into()));
    }

    let mut cells = Vec::new();
    for d in &data {
        let series = d.load()?;
        for (i, entry) in cfg.horizons.iter().enumerate() {
            cells.push(EvaluationCell {
                dataset: d.display_name(),
                series: series.clone(),
                horizon: entry.resolve(i, d.frequency)?,
            });
        }
    }
    let ecfg = EvaluationConfig {
        ewnet: cfg.model.clone(),
        arnn: cfg.arnn_config(),
        conformal_level: cfg.interval.level,
        seed,
    };
    let reports = evaluate_cells(&cells, &forecasters, &ecfg)?;

    let prov = Provenance::new("evaluate", cfg);
    let dir = cfg.output_dir();
    let mut comparisons = Vec::new();
    let mut skipped = None;
    for metric in Metric::ALL {
        let table = rank_table(&reports, metric)?;
        let (header, rows) = rank_rows(&table);
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(&dir.join(format!("ranks_{metric}.csv")), &prov, &header, &rows)?;
        if table.n_cases() >= 2 && table.n_models() >= 2 {
            comparisons.push(compare(&table, cfg.alpha, cfg.mcb_q)?);
        } else {
            skipped = Some(format!(
                "rank tests need at least 2 cases and 2 models, got {} and {}",
                table.n_cases(),
                table.n_models()
            ));
        }
    }
    let payload = EvaluationOutput {
        reports,
        comparisons,
        comparisons_skipped: skipped,
    };
    write_json(
        &dir.join("evaluation.json"),
        &Envelope {
            provenance: &prov,
            payload: &payload,
        },
    )
}

fn metric_from_file_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("ranks_"))
        .unwrap_or("ranks")
        .to_string()
}

#[derive(Serialize)]
struct StatsOutput<'a> {
    source: String,
    n_models: usize,
    n_cases: usize,
    #[serde(flatten)]
    comparison: &'a MetricComparison,
}

pub fn stats(cfg: &RunConfig, rank_files: &[PathBuf]) -> Result<(), CliError> {
    let prov = Provenance::new("stats", cfg);
    for path in rank_files {
        let metric = metric_from_file_name(path);
        let table = RankTable::load_csv(&metric, path)?;
        let comparison = compare(&table, cfg.alpha, cfg.mcb_q)?;
        let out = StatsOutput {
            source: path.display().to_string(),
            n_models: table.n_models(),
            n_cases: table.n_cases(),
            comparison: &comparison,
        };
        write_json(
            &cfg.output_dir().join(format!("stats_{metric}.json")),
            &Envelope {
                provenance: &prov,
                payload: &out,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Profile {
    dataset: String,
    n: usize,
    mean: f64,
    std_dev: f64,
    min: f64,
    max: f64,
    hurst: f64,
    hurst_method: HurstMethod,
    long_range_dependent: bool,
}

#[derive(Serialize)]
struct ProfileOutput {
    profiles: Vec<Profile>,
}

pub fn profile(cfg: &RunConfig) -> Result<(), CliError> {
    let data = cfg.all_data();
    if data.is_empty() {
        return Err(CliError::Config("no input data (--data or \"data\" in the config)".into()));
    }
    let mut profiles = Vec::new();
    for d in data {
        let series = d.load()?;
        let y = series.values();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = if y.len() > 1 {
            y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let hurst = hurst_exponent(y, cfg.hurst_method)?;
        profiles.push(Profile {
            dataset: d.display_name(),
            n: y.len(),
            mean,
            std_dev: var.sqrt(),
            min: y.iter().copied().fold(f64::INFINITY, f64::min),
            max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            hurst,
            hurst_method: cfg.hurst_method,
            long_range_dependent: is_long_range_dependent(hurst),
        });
    }
    let prov = Provenance::new("profile", cfg);
    write_json(
        &cfg.output_dir().join("profile.json"),
        &Envelope {
            provenance: &prov,
            payload: &ProfileOutput { profiles },
        },
    )
}
