//! `epicast` batch command-line interface.
//!
//! Exit statuses: 0 success, 1 output could not be written, 2 configuration
//! or usage error (including missing input files), 3 data error, 4 numerical
//! failure.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epicast::ewnet::{ComponentForm, IntervalMethod, LagGrid};
use epicast::metrics::Metric;
use epicast::series::Frequency;

use config::{parse_horizons, DataConfig, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] epicast::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn output(path: &Path, source: std::io::Error) -> Self {
        CliError::Write {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use epicast::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Io { .. } | E::InvalidParameter(_)) => 2,
            CliError::Core(E::Numeric(_)) => 4,
            CliError::Core(e) if e.is_data_error() => 3,
            CliError::Core(E::UndefinedMase) => 3,
            CliError::Core(_) => 2,
            CliError::Write { .. } | CliError::Output(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "epicast", version, about = "Wavelet neural-network forecasting of epidemic time series")]
struct Cli {
    /// JSON run configuration; command-line flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Default, Args)]
struct DataArgs {
    /// Input CSV as PATH or NAME=PATH; repeat for several datasets.
    #[arg(long, value_name = "PATH")]
    data: Vec<String>,
    /// Column holding the observations [default: value].
    #[arg(long, value_name = "NAME")]
    value_col: Option<String>,
    /// Column holding time labels.
    #[arg(long, value_name = "NAME")]
    label_col: Option<String>,
    /// weekly, monthly or unspecified.
    #[arg(long)]
    frequency: Option<Frequency>,
}

#[derive(Debug, Default, Args)]
struct ModelArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Wavelet detail levels J [default: ⌊ln n⌋ − 1].
    #[arg(long)]
    levels: Option<usize>,
    /// Lag orders to search, e.g. 1-20 or 4.
    #[arg(long, value_name = "A-B")]
    p_grid: Option<LagGrid>,
    /// Lag-selection metric: mase or smape.
    #[arg(long)]
    metric: Option<Metric>,
    /// Series the component networks model: coefficients or mra.
    #[arg(long)]
    components: Option<ComponentForm>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the MODWT multiresolution components of a series.
    Decompose {
        #[command(flatten)]
        data: DataArgs,
        /// Wavelet detail levels J.
        #[arg(long)]
        levels: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Select the lag order and fit EWNet on a series; writes model.json.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Forecast horizon in steps, or short/medium/long for weekly and monthly data.
        #[arg(long)]
        horizon: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Forecast from a fitted model with prediction intervals; writes forecast.csv.
    Forecast {
        /// Model file written by `fit`.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Steps to forecast [default: the fitted horizon].
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        interval: Option<IntervalMethod>,
        /// Conformal coverage level.
        #[arg(long)]
        level: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Rolling-window comparison of forecasters; writes evaluation.json and rank tables.
    #[command(visible_alias = "benchmark")]
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated horizons: short, medium, long, step counts, or kind=steps.
        #[arg(long)]
        horizon: Option<String>,
        /// Built-in forecasters to run: ewnet, rw, rwd, arnn.
        #[arg(long, value_delimiter = ',')]
        forecasters: Vec<String>,
        /// Third-party forecasts as NAME=PATH (columns dataset,horizon,step,point).
        #[arg(long, value_name = "NAME=PATH")]
        external: Vec<String>,
        /// Conformal coverage level.
        #[arg(long)]
        level: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Friedman, Iman–Davenport, MCB and Wilcoxon tests on per-case rank tables.
    Stats {
        /// Rank CSV written by `evaluate` (header `case,<model>...`); repeatable.
        #[arg(long, value_name = "FILE", required = true)]
        ranks: Vec<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Fixed MCB studentized-range constant.
        #[arg(long)]
        mcb_q: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Hurst exponent and summary statistics of each dataset.
    Profile {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn parse_data_item(item: &str) -> DataConfig {
    match item.split_once('=') {
        Some((name, path)) if !name.is_empty() => DataConfig {
            name: Some(name.to_string()),
            ..DataConfig::from_path(PathBuf::from(path))
        },
        _ => DataConfig::from_path(PathBuf::from(item)),
    }
}

fn apply_data(cfg: &mut RunConfig, args: &DataArgs) {
    if !args.data.is_empty() {
        let mut items = args.data.iter().map(|d| parse_data_item(d));
        cfg.data = items.next();
        cfg.datasets = items.collect();
    }
    for d in cfg.data.iter_mut().chain(cfg.datasets.iter_mut()) {
        if let Some(v) = &args.value_col {
            d.value_column = v.clone();
        }
        if let Some(l) = &args.label_col {
            d.label_column = Some(l.clone());
        }
        if let Some(f) = args.frequency {
            d.frequency = f;
        }
    }
}

fn apply_model(cfg: &mut RunConfig, args: &ModelArgs) {
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(j) = args.levels {
        cfg.model.levels = Some(j);
    }
    if let Some(g) = args.p_grid {
        cfg.model.p_grid = g;
    }
    if let Some(m) = args.metric {
        cfg.model.selection_metric = m;
    }
    if let Some(c) = args.components {
        cfg.model.components = c;
    }
}

fn apply_out(cfg: &mut RunConfig, args: &OutArgs) {
    if let Some(o) = &args.out {
        cfg.output_dir = Some(o.clone());
    }
}

fn base_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::Decompose { data, levels, out } => {
            apply_data(&mut cfg, &data);
            apply_out(&mut cfg, &out);
            if let Some(j) = levels {
                cfg.model.levels = Some(j);
            }
            cfg.validate()?;
            commands::decompose(&cfg)
        }
        Command::Fit {
            data,
            model,
            horizon,
            out,
        } => {
            apply_data(&mut cfg, &data);
            apply_model(&mut cfg, &model);
            apply_out(&mut cfg, &out);
            if let Some(h) = horizon {
                let entries = parse_horizons(&h)?;
                let [entry] = entries.as_slice() else {
                    return Err(CliError::Config("fit takes a single --horizon".into()));
                };
                let freq = cfg.primary_data()?.frequency;
                cfg.model.horizon = entry.resolve(0, freq)?.steps;
            }
            cfg.validate()?;
            commands::fit(&cfg)
        }
        Command::Forecast {
            model,
            horizon,
            interval,
            level,
            out,
        } => commands::forecast(&model, horizon, interval, level, out.out.or(cfg.output_dir)),
        Command::Evaluate {
            data,
            model,
            horizon,
            forecasters,
            external,
            level,
            alpha,
            out,
        } => {
            apply_data(&mut cfg, &data);
            apply_model(&mut cfg, &model);
            apply_out(&mut cfg, &out);
            if let Some(h) = horizon {
                cfg.horizons = parse_horizons(&h)?;
            }
            if !forecasters.is_empty() {
                cfg.forecasters = forecasters;
            }
            for item in &external {
                let (name, path) = item
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("--external expects NAME=PATH, got `{item}`")))?;
                cfg.external_forecasts.insert(name.to_string(), PathBuf::from(path));
            }
            if let Some(l) = level {
                cfg.interval.level = l;
            }
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            cfg.validate()?;
            commands::evaluate(&cfg)
        }
        Command::Stats {
            ranks,
            alpha,
            mcb_q,
            out,
        } => {
            apply_out(&mut cfg, &out);
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if mcb_q.is_some() {
                cfg.mcb_q = mcb_q;
            }
            cfg.validate()?;
            commands::stats(&cfg, &ranks)
        }
        Command::Profile { data, out } => {
            apply_data(&mut cfg, &data);
            apply_out(&mut cfg, &out);
            cfg.validate()?;
            commands::profile(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
