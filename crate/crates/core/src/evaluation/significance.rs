//! Rank-based comparison of forecasters: Friedman and Iman–Davenport
//! omnibus tests, the Wilcoxon signed-rank test for paired errors, and
//! multiple comparisons with the best (MCB).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use super::ranks::{midranks, RankTable};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Retain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub df: Vec<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
}

impl TestResult {
    fn new(test: &str, statistic: f64, df: Vec<f64>, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            test: test.to_string(),
            statistic,
            df,
            p_value,
            alpha,
            decision: if p_value < alpha {
                Decision::Reject
            } else {
                Decision::Retain
            },
        }
    }

    /// The same result judged at a different significance level.
    pub fn at_alpha(&self, alpha: f64) -> Self {
        Self::new(&self.test, self.statistic, self.df.clone(), self.p_value, alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")))
    }
}

fn check_table(ranks: &RankTable) -> Result<()> {
    if ranks.n_models() < 2 || ranks.n_cases() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 models and 2 cases, got {} and {}",
            ranks.n_models(),
            ranks.n_cases()
        )));
    }
    Ok(())
}

fn stats_err(e: impl std::fmt::Display) -> Error {
    Error::Numeric(e.to_string())
}

/// `χ²_F = 12D / (M(M+1)) · [Σ R_m² − M(M+1)²/4]` on the mean ranks `R_m`,
/// referred to a chi-square with `M − 1` degrees of freedom.
pub fn friedman_chi2(ranks: &RankTable) -> Result<TestResult> {
    check_table(ranks)?;
    let m = ranks.n_models() as f64;
    let d = ranks.n_cases() as f64;
    let sum_sq: f64 = ranks.mean_ranks().iter().map(|r| r * r).sum();
    let chi2 = (12.0 * d / (m * (m + 1.0)) * (sum_sq - m * (m + 1.0).powi(2) / 4.0)).max(0.0);
    let dist = ChiSquared::new(m - 1.0).map_err(stats_err)?;
    Ok(TestResult::new("friedman", chi2, vec![m - 1.0], dist.sf(chi2), DEFAULT_ALPHA))
}

/// `F_F = (D − 1) χ² / (D(M − 1) − χ²)` on `(M − 1, (M − 1)(D − 1))`
/// degrees of freedom.
pub fn iman_f(chi2: f64, m: usize, d: usize) -> Result<TestResult> {
    if m < 2 || d < 2 {
        return Err(Error::InvalidParameter(format!("need M, D >= 2, got {m}, {d}")));
    }
    if !(chi2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("chi-square {chi2} must be >= 0")));
    }
    let (mf, df) = (m as f64, d as f64);
    let denom = df * (mf - 1.0) - chi2;
    if denom <= 0.0 {
        return Err(Error::Numeric(format!(
            "chi-square {chi2} leaves a non-positive denominator D(M-1) - chi2 = {denom}"
        )));
    }
    let f = (df - 1.0) * chi2 / denom;
    let (df1, df2) = (mf - 1.0, (mf - 1.0) * (df - 1.0));
    let dist = FisherSnedecor::new(df1, df2).map_err(stats_err)?;
    Ok(TestResult::new("iman-davenport", f, vec![df1, df2], dist.sf(f), DEFAULT_ALPHA))
}

/// Friedman followed by the Iman–Davenport correction on the same table.
pub fn friedman_iman(ranks: &RankTable) -> Result<(TestResult, TestResult)> {
    let chi = friedman_chi2(ranks)?;
    let f = iman_f(chi.statistic, ranks.n_models(), ranks.n_cases())?;
    Ok((chi, f))
}

/// Largest sample size handled by exact enumeration.
pub const WILCOXON_EXACT_MAX: usize = 20;
/// Fewest non-zero differences accepted.
pub const WILCOXON_MIN_N: usize = 5;

/// Non-zero differences `a − b` with the midranks of their magnitudes.
fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numeric("non-finite paired difference".into()));
    }
    if diffs.len() < WILCOXON_MIN_N {
        return Err(Error::InvalidParameter(format!(
            "Wilcoxon test needs at least {WILCOXON_MIN_N} non-zero differences, got {}",
            diffs.len()
        )));
    }
    let ranks = midranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    Ok((diffs, ranks))
}

fn positive_rank_sum(diffs: &[f64], ranks: &[f64]) -> f64 {
    diffs.iter().zip(ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum()
}

/// Exact two-sided p-value of `W+` over all `2^n` equally likely sign
/// assignments of the given ranks. Ranks must be whole or half integers.
pub fn wilcoxon_exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with continuity and tie corrections.
pub fn wilcoxon_normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * Normal::standard().sf(z)).min(1.0)
}

/// Two-sided Wilcoxon signed-rank test of paired samples. The statistic is
/// `min(W+, W−)`; zero differences are dropped.
pub fn wilcoxon_signed_rank(errors_a: &[f64], errors_b: &[f64], alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    let (diffs, ranks) = signed_ranks(errors_a, errors_b)?;
    let n = diffs.len();
    let w_plus = positive_rank_sum(&diffs, &ranks);
    let w_minus = (n * (n + 1)) as f64 / 2.0 - w_plus;
    let p = if n <= WILCOXON_EXACT_MAX {
        wilcoxon_exact_p(&ranks, w_plus)
    } else {
        wilcoxon_normal_p(&ranks, w_plus)
    };
    Ok(TestResult::new(
        "wilcoxon-signed-rank",
        w_plus.min(w_minus),
        vec![n as f64],
        p,
        alpha,
    ))
}

/// `P(R <= q)` for the range `R` of `k` independent standard normals.
pub fn studentized_range_cdf(q: f64, k: usize) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let normal = Normal::standard();
    let integrand = |z: f64| {
        let inner = normal.cdf(z) - normal.cdf(z - q);
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * inner.powi(k as i32 - 1)
    };
    // composite Simpson over the effective support of the outer density
    let (a, b, steps) = (-9.0, 9.0 + q, 4000usize);
    let h = (b - a) / steps as f64;
    let mut acc = integrand(a) + integrand(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(a + i as f64 * h);
    }
    (k as f64 * acc * h / 3.0).clamp(0.0, 1.0)
}

/// Upper-`alpha` quantile of the studentized range of `k` means with
/// infinite error degrees of freedom.
pub fn studentized_range_quantile(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if k < 2 {
        return Err(Error::InvalidParameter(format!("studentized range needs k >= 2, got {k}")));
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0, 1.0);
    while studentized_range_cdf(hi, k) < target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Numeric("studentized range quantile did not bracket".into()));
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, k) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McbInterval {
    pub model: String,
    pub mean_rank: f64,
    pub lower: f64,
    pub upper: f64,
    /// Interval lies entirely above the best model's upper bound.
    pub significantly_worse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McbAnalysis {
    pub alpha: f64,
    pub q: f64,
    pub half_width: f64,
    pub n_cases: usize,
    pub best: String,
    pub intervals: Vec<McbInterval>,
}

/// MCB from mean ranks over `d` cases. The half-width is
/// `(q / √2) · √(M(M+1) / (12 D))` with `q` the studentized range quantile
/// (computed when `q_override` is `None`).
pub fn mcb_from_mean_ranks(
    models: &[String],
    mean_ranks: &[f64],
    d: usize,
    alpha: f64,
    q_override: Option<f64>,
) -> Result<McbAnalysis> {
    check_alpha(alpha)?;
    let m = models.len();
    if m < 2 || d < 2 {
        return Err(Error::InvalidParameter(format!("need M, D >= 2, got {m}, {d}")));
    }
    if mean_ranks.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: mean_ranks.len(),
        });
    }
    let q = match q_override {
        Some(q) if q > 0.0 => q,
        Some(q) => return Err(Error::InvalidParameter(format!("MCB constant {q} must be > 0"))),
        None => studentized_range_quantile(alpha, m)?,
    };
    let (mf, df) = (m as f64, d as f64);
    let half_width = q / 2f64.sqrt() * (mf * (mf + 1.0) / (12.0 * df)).sqrt();
    let best = (0..m)
        .min_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]))
        .expect("m >= 2");
    let best_upper = mean_ranks[best] + half_width;
    let intervals = models
        .iter()
        .zip(mean_ranks)
        .map(|(name, &r)| McbInterval {
            model: name.clone(),
            mean_rank: r,
            lower: r - half_width,
            upper: r + half_width,
            significantly_worse: r - half_width > best_upper,
        })
        .collect();
    Ok(McbAnalysis {
        alpha,
        q,
        half_width,
        n_cases: d,
        best: models[best].clone(),
        intervals,
    })
}

pub fn mcb_analysis(ranks: &RankTable, alpha: f64) -> Result<McbAnalysis> {
    check_table(ranks)?;
    mcb_from_mean_ranks(&ranks.models, &ranks.mean_ranks(), ranks.n_cases(), alpha, None)
}
