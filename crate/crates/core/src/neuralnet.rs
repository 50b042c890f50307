//! Single-hidden-layer autoregressive network ARNN(p, k).
//!
//! Each network maps the `p` most recent (normalized) observations through
//! `k` logistic hidden units to one linear output. Training is full-batch
//! gradient descent on half the mean squared one-step error, repeated from
//! `R` independent random starts whose predictions are averaged.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Number of hidden units paired with `p` inputs: `⌊(p + 1) / 2⌋`.
pub fn hidden_neurons(p: usize) -> usize {
    (p + 1) / 2
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gradient-descent settings shared by every restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Minimum per-epoch loss improvement that counts as progress.
    pub tolerance: f64,
    /// Consecutive epochs without progress before stopping early.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            restarts: 20,
            seed: 0,
            tolerance: 1e-8,
            patience: 25,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Affine map to zero mean and unit standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub center: f64,
    pub scale: f64,
}

impl Scaler {
    fn fit(values: &[f64]) -> (Self, bool) {
        let n = values.len() as f64;
        let center = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - center) * (v - center)).sum::<f64>() / n;
        let scale = var.sqrt();
        if !(scale > 1e-12 * center.abs().max(1.0)) {
            return (Self { center, scale: 1.0 }, true);
        }
        (Self { center, scale }, false)
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.center) / self.scale
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.scale + self.center
    }
}

/// Weights of one ARNN(p, k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkWeights {
    /// `k` rows of `p` input weights; column `p - 1` multiplies the most recent lag.
    pub input_to_hidden: Vec<Vec<f64>>,
    pub hidden_bias: Vec<f64>,
    pub hidden_to_output: Vec<f64>,
    pub output_bias: f64,
}

impl NetworkWeights {
    pub fn zeros(p: usize, k: usize) -> Self {
        Self {
            input_to_hidden: vec![vec![0.0; p]; k],
            hidden_bias: vec![0.0; k],
            hidden_to_output: vec![0.0; k],
            output_bias: 0.0,
        }
    }

    /// Uniform `[-0.5, 0.5]` draws; input weights additionally scaled by `1/√p`.
    pub fn random<R: Rng>(p: usize, k: usize, rng: &mut R) -> Self {
        let input_scale = 1.0 / (p as f64).sqrt();
        let mut draw = |s: f64| (rng.random::<f64>() - 0.5) * s;
        let input_to_hidden = (0..k)
            .map(|_| (0..p).map(|_| draw(input_scale)).collect())
            .collect();
        let hidden_bias = (0..k).map(|_| draw(1.0)).collect();
        let hidden_to_output = (0..k).map(|_| draw(1.0)).collect();
        let output_bias = draw(1.0);
        Self {
            input_to_hidden,
            hidden_bias,
            hidden_to_output,
            output_bias,
        }
    }

    pub fn lags(&self) -> usize {
        self.input_to_hidden.first().map_or(0, Vec::len)
    }

    pub fn hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn is_finite(&self) -> bool {
        self.to_params().iter().all(|v| v.is_finite())
    }

    /// Output in normalized space for one lag window.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut out = self.output_bias;
        for ((row, b), v) in self
            .input_to_hidden
            .iter()
            .zip(&self.hidden_bias)
            .zip(&self.hidden_to_output)
        {
            let z = b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            out += v * sigmoid(z);
        }
        out
    }

    /// Flat parameter vector: input weights row by row, hidden biases,
    /// output weights, output bias.
    pub fn to_params(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.input_to_hidden.iter().flatten().copied().collect();
        out.extend(&self.hidden_bias);
        out.extend(&self.hidden_to_output);
        out.push(self.output_bias);
        out
    }

    pub fn from_params(p: usize, k: usize, params: &[f64]) -> Result<Self> {
        let expected = k * p + 2 * k + 1;
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: params.len(),
            });
        }
        let (w, rest) = params.split_at(k * p);
        let (b, rest) = rest.split_at(k);
        let (v, c) = rest.split_at(k);
        Ok(Self {
            input_to_hidden: w.chunks(p.max(1)).map(<[f64]>::to_vec).collect(),
            hidden_bias: b.to_vec(),
            hidden_to_output: v.to_vec(),
            output_bias: c[0],
        })
    }
}

/// Lag-window design matrix and one-step targets.
#[derive(Debug, Clone)]
pub struct LaggedPairs {
    p: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl LaggedPairs {
    /// Pairs `(z[t-p..t], z[t])` for every `t >= p`.
    pub fn new(z: &[f64], p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("lag order must be >= 1".into()));
        }
        if z.len() <= p {
            return Err(Error::TooShort {
                needed: p + 1,
                got: z.len(),
            });
        }
        let mut inputs = Vec::with_capacity((z.len() - p) * p);
        for t in p..z.len() {
            inputs.extend_from_slice(&z[t - p..t]);
        }
        Ok(Self {
            p,
            inputs,
            targets: z[p..].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn lags(&self) -> usize {
        self.p
    }
}

/// Half mean squared error of `params` on `data`, and its gradient.
///
/// `params` uses the [`NetworkWeights::to_params`] layout.
pub fn loss_and_gradient(params: &[f64], k: usize, data: &LaggedPairs) -> (f64, Vec<f64>) {
    let p = data.p;
    let (w, rest) = params.split_at(k * p);
    let (b, rest) = rest.split_at(k);
    let (v, c) = rest.split_at(k);
    let c = c[0];

    let mut grad = vec![0.0; params.len()];
    let mut hidden = vec![0.0; k];
    let n = data.len() as f64;
    let mut loss = 0.0;

    for (x, &y) in data.inputs.chunks_exact(p).zip(&data.targets) {
        let mut out = c;
        for i in 0..k {
            let row = &w[i * p..(i + 1) * p];
            let z = b[i] + row.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>();
            hidden[i] = sigmoid(z);
            out += v[i] * hidden[i];
        }
        let e = out - y;
        loss += 0.5 * e * e;
        let e = e / n;
        let (gw, rest) = grad.split_at_mut(k * p);
        let (gb, rest) = rest.split_at_mut(k);
        let (gv, gc) = rest.split_at_mut(k);
        gc[0] += e;
        for i in 0..k {
            let a = hidden[i];
            gv[i] += e * a;
            let delta = e * v[i] * a * (1.0 - a);
            gb[i] += delta;
            for (g, xi) in gw[i * p..(i + 1) * p].iter_mut().zip(x) {
                *g += delta * xi;
            }
        }
    }
    (loss / n, grad)
}

/// Half mean squared error only.
pub fn loss(params: &[f64], k: usize, data: &LaggedPairs) -> f64 {
    let weights = NetworkWeights::from_params(data.p, k, params).expect("parameter layout");
    let n = data.len() as f64;
    data.inputs
        .chunks_exact(data.p)
        .zip(&data.targets)
        .map(|(x, &y)| {
            let e = weights.predict(x) - y;
            0.5 * e * e
        })
        .sum::<f64>()
        / n
}

/// Outcome of gradient descent from one starting point.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub weights: NetworkWeights,
    /// Loss before each update, followed by the final loss.
    pub losses: Vec<f64>,
}

/// Full-batch gradient descent from `init` without momentum.
pub fn train(init: &NetworkWeights, data: &LaggedPairs, cfg: &TrainConfig) -> Result<TrainTrace> {
    let k = init.hidden();
    let mut params = init.to_params();
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    let mut stalled = 0;
    for _ in 0..cfg.epochs {
        let (l, grad) = loss_and_gradient(&params, k, data);
        if !l.is_finite() {
            return Err(Error::Numeric("training loss diverged".into()));
        }
        if let Some(&prev) = losses.last() {
            if prev - l < cfg.tolerance {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        losses.push(l);
        if stalled >= cfg.patience {
            break;
        }
        for (w, g) in params.iter_mut().zip(&grad) {
            *w -= cfg.learning_rate * g;
        }
    }
    let final_loss = loss(&params, k, data);
    if !final_loss.is_finite() {
        return Err(Error::Numeric("training loss diverged".into()));
    }
    losses.push(final_loss);
    Ok(TrainTrace {
        weights: NetworkWeights::from_params(data.p, k, &params)?,
        losses,
    })
}

/// A fitted ARNN(p, k): `R` networks averaged at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNetModel {
    pub restarts: Vec<NetworkWeights>,
    pub p: usize,
    pub k: usize,
    pub scaler: Scaler,
    pub seed: u64,
    /// Set when the training series had zero variance; the model then
    /// predicts the series level.
    pub constant: bool,
}

impl NeuralNetModel {
    /// Assemble a model from explicit weights.
    pub fn from_weights(restarts: Vec<NetworkWeights>, scaler: Scaler) -> Result<Self> {
        let first = restarts
            .first()
            .ok_or_else(|| Error::InvalidParameter("at least one network is required".into()))?;
        let (p, k) = (first.lags(), first.hidden());
        if p == 0 || k == 0 {
            return Err(Error::InvalidParameter("network must have p, k >= 1".into()));
        }
        for w in &restarts {
            if w.lags() != p
                || w.hidden() != k
                || w.hidden_to_output.len() != k
                || w.input_to_hidden.iter().any(|r| r.len() != p)
            {
                return Err(Error::InvalidParameter("inconsistent network dimensions".into()));
            }
            if !w.is_finite() {
                return Err(Error::Numeric("non-finite network weight".into()));
            }
        }
        if !(scaler.scale > 0.0) {
            return Err(Error::InvalidParameter("scaler scale must be positive".into()));
        }
        Ok(Self {
            restarts,
            p,
            k,
            scaler,
            seed: 0,
            constant: false,
        })
    }

    /// Average network output for the `p` most recent raw values (oldest first).
    pub fn forecast_one(&self, recent: &[f64]) -> Result<f64> {
        if recent.len() != self.p {
            return Err(Error::LengthMismatch {
                expected: self.p,
                got: recent.len(),
            });
        }
        if let Some(i) = recent.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i + 1 });
        }
        let x: Vec<f64> = recent.iter().map(|&v| self.scaler.normalize(v)).collect();
        Ok(self.predict_normalized(&x))
    }

    fn predict_normalized(&self, x: &[f64]) -> f64 {
        let mean = self.restarts.iter().map(|w| w.predict(x)).sum::<f64>() / self.restarts.len() as f64;
        self.scaler.denormalize(mean)
    }

    /// `h` values produced by feeding each forecast back into the lag window.
    pub fn forecast_recursive(&self, series: &[f64], h: usize) -> Result<Vec<f64>> {
        if h == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if series.len() < self.p {
            return Err(Error::TooShort {
                needed: self.p,
                got: series.len(),
            });
        }
        let mut window = series[series.len() - self.p..].to_vec();
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            let next = self.forecast_one(&window)?;
            out.push(next);
            window.remove(0);
            window.push(next);
        }
        Ok(out)
    }

    /// In-sample one-step predictions for `series[p..]`.
    pub fn fitted_values(&self, series: &[f64]) -> Result<Vec<f64>> {
        if series.len() <= self.p {
            return Err(Error::TooShort {
                needed: self.p + 1,
                got: series.len(),
            });
        }
        (self.p..series.len())
            .map(|t| self.forecast_one(&series[t - self.p..t]))
            .collect()
    }
}

/// Fit ARNN(p, k) to `series` with `cfg.restarts` independent starts.
///
/// Restart `r` draws its initial weights from a stream derived from
/// `(cfg.seed, r)`, so results do not depend on thread scheduling.
pub fn fit_network(series: &[f64], p: usize, k: usize, cfg: &TrainConfig) -> Result<NeuralNetModel> {
    cfg.validate()?;
    if p == 0 || k == 0 {
        return Err(Error::InvalidParameter("p and k must be >= 1".into()));
    }
    if series.len() < p + 2 {
        return Err(Error::TooShort {
            needed: p + 2,
            got: series.len(),
        });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i + 1 });
    }

    let (scaler, constant) = Scaler::fit(series);
    if constant {
        log::debug!("zero-variance training series; fitting constant predictor");
        return Ok(NeuralNetModel {
            restarts: vec![NetworkWeights::zeros(p, k)],
            p,
            k,
            scaler,
            seed: cfg.seed,
            constant: true,
        });
    }

    let z: Vec<f64> = series.iter().map(|&v| scaler.normalize(v)).collect();
    let data = LaggedPairs::new(&z, p)?;
    let restarts = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(cfg.seed, r as u64);
            let init = NetworkWeights::random(p, k, &mut rng);
            train(&init, &data, cfg).map(|t| t.weights)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(NeuralNetModel {
        restarts,
        p,
        k,
        scaler,
        seed: cfg.seed,
        constant: false,
    })
}
