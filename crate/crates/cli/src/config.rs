//! Run configuration read from JSON and overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use epicast::baselines::ArnnConfig;
use epicast::evaluation::{HorizonKind, HorizonSpec, HurstMethod, DEFAULT_ALPHA};
use epicast::ewnet::{EwnetConfig, IntervalMethod};
use epicast::series::{load_csv, Frequency, TimeSeries};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Dataset name used in reports; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub path: PathBuf,
    #[serde(default = "default_value_column")]
    pub value_column: String,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub frequency: Frequency,
}

fn default_value_column() -> String {
    "value".to_string()
}

impl DataConfig {
    pub fn from_path(path: PathBuf) -> Self {
        Self {
            name: None,
            path,
            value_column: default_value_column(),
            label_column: None,
            frequency: Frequency::Unspecified,
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "series".to_string())
        })
    }

    pub fn load(&self) -> Result<TimeSeries, CliError> {
        let mut series = load_csv(&self.path, &self.value_column, self.label_column.as_deref())?;
        series.set_frequency(self.frequency);
        Ok(series)
    }
}

/// A horizon given by name, by step count, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonEntry {
    Kind(HorizonKind),
    Steps(usize),
    Spec { kind: HorizonKind, steps: usize },
}

impl HorizonEntry {
    /// Bare step counts take their kind from their position in the list.
    pub fn resolve(self, position: usize, frequency: Frequency) -> Result<HorizonSpec, CliError> {
        let spec = match self {
            HorizonEntry::Kind(kind) => HorizonSpec::standard(kind, frequency)?,
            HorizonEntry::Steps(steps) => {
                let kind = *HorizonKind::ALL.get(position).ok_or_else(|| {
                    CliError::Config("at most three horizons (short, medium, long) may be given".into())
                })?;
                HorizonSpec::new(kind, steps, frequency)?
            }
            HorizonEntry::Spec { kind, steps } => HorizonSpec::new(kind, steps, frequency)?,
        };
        Ok(spec)
    }
}

/// Parse `short,medium,26` or `long=52` style lists.
pub fn parse_horizons(text: &str) -> Result<Vec<HorizonEntry>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            if let Some((kind, steps)) = item.split_once('=') {
                let kind = kind.parse::<HorizonKind>()?;
                let steps = steps
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad horizon step count `{steps}`")))?;
                Ok(HorizonEntry::Spec { kind, steps })
            } else if let Ok(steps) = item.parse::<usize>() {
                Ok(HorizonEntry::Steps(steps))
            } else {
                Ok(HorizonEntry::Kind(item.parse()?))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalConfig {
    pub method: IntervalMethod,
    /// Conformal level; pre-control limits have a fixed nominal level.
    pub level: f64,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        Self {
            method: IntervalMethod::Precontrol,
            level: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<DataConfig>,
    /// Additional datasets for `evaluate`.
    pub datasets: Vec<DataConfig>,
    pub model: EwnetConfig,
    /// Plain ARNN baseline settings; inherits grid, metric and training
    /// settings from `model` when absent.
    pub arnn: Option<ArnnConfig>,
    pub horizons: Vec<HorizonEntry>,
    pub forecasters: Vec<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub external_forecasts: BTreeMap<String, PathBuf>,
    pub interval: IntervalConfig,
    pub alpha: f64,
    /// Fixed studentized-range constant for MCB instead of the computed quantile.
    pub mcb_q: Option<f64>,
    pub hurst_method: HurstMethod,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            datasets: Vec::new(),
            model: EwnetConfig::default(),
            arnn: None,
            horizons: HorizonKind::ALL.iter().map(|&k| HorizonEntry::Kind(k)).collect(),
            forecasters: vec!["ewnet".into(), "rw".into(), "rwd".into(), "arnn".into()],
            seed: None,
            output_dir: None,
            external_forecasts: BTreeMap::new(),
            interval: IntervalConfig::default(),
            alpha: DEFAULT_ALPHA,
            mcb_q: None,
            hurst_method: HurstMethod::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        if let Some(a) = &self.arnn {
            a.train.validate()?;
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.interval.level > 0.0 && self.interval.level < 1.0) {
            return Err(CliError::Config(format!(
                "interval level {} outside (0, 1)",
                self.interval.level
            )));
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("a seed is required (--seed or \"seed\" in the config)".into()))
    }

    pub fn primary_data(&self) -> Result<&DataConfig, CliError> {
        self.data
            .as_ref()
            .or(self.datasets.first())
            .ok_or_else(|| CliError::Config("no input data (--data or \"data\" in the config)".into()))
    }

    /// `data` followed by `datasets`.
    pub fn all_data(&self) -> Vec<&DataConfig> {
        self.data.iter().chain(&self.datasets).collect()
    }

    pub fn arnn_config(&self) -> ArnnConfig {
        self.arnn.clone().unwrap_or_else(|| ArnnConfig {
            p_grid: self.model.p_grid,
            selection_metric: self.model.selection_metric,
            seasonal_lag: self.model.seasonal_lag,
            train: self.model.train.clone(),
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// The configuration as echoed into outputs: everything except where
    /// the outputs go.
    pub fn provenance(&self) -> Self {
        Self {
            output_dir: None,
            ..self.clone()
        }
    }
}
