//! Maximal overlap discrete wavelet transform (MODWT) and its additive
//! multiresolution analysis (MRA), periodic boundary only.
//!
//! The forward transform filters the series circularly with the level-`j`
//! equivalent MODWT filters
//!
//! ```text
//! W[j,t] = sum_m h~[j,m] * Y[(t - m) mod N]
//! V[J,t] = sum_m g~[J,m] * Y[(t - m) mod N]
//! ```
//!
//! and maps the coefficients back to the time domain as details
//! `D_j = u_jᵀ W_j` and smooth `S_J = v_Jᵀ V_J`, where `u_j`, `v_J` are the
//! circulant matrices built from the periodized filters. The components sum
//! to the original series exactly (up to rounding).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FILTER_TOL: f64 = 1e-12;
const ORACLE_MAX_LEN: usize = 512;

/// An orthonormal scaling/wavelet filter pair of even width `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPair {
    name: String,
    scaling: Vec<f64>,
    wavelet: Vec<f64>,
}

impl FilterPair {
    /// Build a filter pair, checking unit energy, orthogonality to even shifts,
    /// and the quadrature-mirror relation `g[m] = (-1)^(m+1) h[M-1-m]`.
    pub fn new(name: impl Into<String>, scaling: Vec<f64>, wavelet: Vec<f64>) -> Result<Self> {
        let pair = Self {
            name: name.into(),
            scaling,
            wavelet,
        };
        pair.validate()?;
        Ok(pair)
    }

    fn validate(&self) -> Result<()> {
        let m = self.scaling.len();
        if m < 2 || m % 2 != 0 || self.wavelet.len() != m {
            return Err(Error::InvalidParameter(format!(
                "filter `{}` must have equal even widths",
                self.name
            )));
        }
        for (label, f) in [("scaling", &self.scaling), ("wavelet", &self.wavelet)] {
            let energy: f64 = f.iter().map(|x| x * x).sum();
            if (energy - 1.0).abs() > FILTER_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{label} filter of `{}` has energy {energy}",
                    self.name
                )));
            }
            for shift in (2..m).step_by(2) {
                let dot = even_shift_product(f, shift);
                if dot.abs() > FILTER_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "{label} filter of `{}` is not orthogonal to its shift by {shift}",
                        self.name
                    )));
                }
            }
        }
        if !self.is_quadrature_mirror() {
            return Err(Error::InvalidParameter(format!(
                "filters of `{}` are not a quadrature-mirror pair",
                self.name
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn wavelet(&self) -> &[f64] {
        &self.wavelet
    }

    pub fn width(&self) -> usize {
        self.scaling.len()
    }

    pub fn is_quadrature_mirror(&self) -> bool {
        let m = self.width();
        (0..m).all(|i| {
            let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            (self.scaling[i] - sign * self.wavelet[m - 1 - i]).abs() <= FILTER_TOL
        })
    }
}

/// `sum_m f[m] f[m + shift]`; zero-padded beyond the filter width.
pub fn even_shift_product(f: &[f64], shift: usize) -> f64 {
    f.iter()
        .zip(f.iter().skip(shift))
        .map(|(a, b)| a * b)
        .sum()
}

/// The Haar pair: `g = (1/√2, 1/√2)`, `h = (1/√2, -1/√2)`.
pub fn haar_filter() -> FilterPair {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    FilterPair {
        name: "haar".to_string(),
        scaling: vec![c, c],
        wavelet: vec![c, -c],
    }
}

/// Look up a built-in filter by name.
pub fn filter_by_name(name: &str) -> Result<FilterPair> {
    match name {
        "haar" => Ok(haar_filter()),
        other => Err(Error::InvalidParameter(format!("unknown wavelet filter `{other}`"))),
    }
}

/// Level-`j` equivalent MODWT filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModwtFilterPair {
    pub scaling: Vec<f64>,
    pub wavelet: Vec<f64>,
    pub level: usize,
    pub width: usize,
}

/// Equivalent filters for level `level`, rescaled by `2^{-j/2}` relative to
/// the DWT filters so that each carries energy `2^{-j}`.
pub fn modwt_filters(base: &FilterPair, level: usize) -> Result<ModwtFilterPair> {
    if level < 1 {
        return Err(Error::InvalidParameter("wavelet level must be >= 1".into()));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let g: Vec<f64> = base.scaling.iter().map(|x| x * inv_sqrt2).collect();
    let h: Vec<f64> = base.wavelet.iter().map(|x| x * inv_sqrt2).collect();

    // g~_j = g~ * g~↑2 * ... * g~↑2^{j-1};  h~_j = g~_{j-1} * h~↑2^{j-1}
    let mut smooth = vec![1.0];
    for stage in 0..level - 1 {
        smooth = convolve(&smooth, &upsample(&g, 1 << stage));
    }
    let top = 1usize << (level - 1);
    let wavelet = convolve(&smooth, &upsample(&h, top));
    let scaling = convolve(&smooth, &upsample(&g, top));
    let width = ((1usize << level) - 1) * (base.width() - 1) + 1;
    debug_assert_eq!(wavelet.len(), width);
    Ok(ModwtFilterPair {
        scaling,
        wavelet,
        level,
        width,
    })
}

fn upsample(f: &[f64], factor: usize) -> Vec<f64> {
    let mut out = vec![0.0; (f.len() - 1) * factor + 1];
    for (i, &v) in f.iter().enumerate() {
        out[i * factor] = v;
    }
    out
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Wrap a filter onto a circle of length `n`.
fn periodize(f: &[f64], n: usize) -> Vec<f64> {
    // len < n only when the filter already fits, so `m % len` never wraps early
    let len = n.min(f.len());
    let mut out = vec![0.0; len];
    for (m, &v) in f.iter().enumerate() {
        out[m % len] += v;
    }
    out
}

/// `out[t] = sum_m f[m] * x[(t - m) mod N]`
fn circular_filter(f: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let f = periodize(f, n);
    (0..n)
        .map(|t| {
            f.iter()
                .enumerate()
                .map(|(m, &c)| c * x[(t + n - m) % n])
                .sum()
        })
        .collect()
}

/// `out[s] = sum_m f[m] * c[(s + m) mod N]`, i.e. multiplication by the
/// transpose of the circulant filtering matrix.
fn circular_filter_transpose(f: &[f64], c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let f = periodize(f, n);
    (0..n)
        .map(|s| f.iter().enumerate().map(|(m, &v)| v * c[(s + m) % n]).sum())
        .collect()
}

/// Boundary handling tag; only periodic extension is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
}

/// MRA of a series into `levels` detail series and one smooth series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    pub details: Vec<Vec<f64>>,
    pub smooth: Vec<f64>,
    pub levels: usize,
    pub filter: String,
    pub boundary: Boundary,
    /// MODWT wavelet coefficients `W_1 .. W_J`.
    #[serde(default)]
    pub wavelet_coefficients: Vec<Vec<f64>>,
    /// MODWT scaling coefficients `V_J`.
    #[serde(default)]
    pub scaling_coefficients: Vec<f64>,
}

impl WaveletDecomposition {
    pub fn len(&self) -> usize {
        self.smooth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smooth.is_empty()
    }

    /// Details in level order followed by the smooth.
    pub fn components(&self) -> impl Iterator<Item = &[f64]> {
        self.details
            .iter()
            .map(Vec::as_slice)
            .chain(std::iter::once(self.smooth.as_slice()))
    }

    pub fn component_count(&self) -> usize {
        self.levels + 1
    }

    /// `W_1 .. W_J` followed by `V_J`. With the Haar filter these also add
    /// up to the original series, and `W_{j,t}`, `V_{J,t}` only involve
    /// observations up to `t` once `t >= L_j - 1`.
    pub fn coefficient_components(&self) -> impl Iterator<Item = &[f64]> {
        self.wavelet_coefficients
            .iter()
            .map(Vec::as_slice)
            .chain(std::iter::once(self.scaling_coefficients.as_slice()))
    }
}

fn check_input(series: &[f64], levels: usize) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    if levels < 1 {
        return Err(Error::InvalidParameter("number of levels must be >= 1".into()));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i + 1 });
    }
    let max_recommended = (series.len() as f64).log2().floor() as usize;
    if levels > max_recommended {
        log::warn!(
            "{levels} levels exceeds floor(log2 N) = {max_recommended} for N = {}",
            series.len()
        );
    }
    Ok(())
}

/// Forward MODWT followed by the MRA mapping.
pub fn modwt_forward(series: &[f64], levels: usize, filter: &FilterPair) -> Result<WaveletDecomposition> {
    check_input(series, levels)?;
    let filters = (1..=levels)
        .map(|j| modwt_filters(filter, j))
        .collect::<Result<Vec<_>>>()?;

    let mut wavelet_coefficients = Vec::with_capacity(levels);
    let mut details = Vec::with_capacity(levels);
    for f in &filters {
        let w = circular_filter(&f.wavelet, series);
        details.push(circular_filter_transpose(&f.wavelet, &w));
        wavelet_coefficients.push(w);
    }
    let top = &filters[levels - 1];
    let v = circular_filter(&top.scaling, series);
    let smooth = circular_filter_transpose(&top.scaling, &v);

    Ok(WaveletDecomposition {
        details,
        smooth,
        levels,
        filter: filter.name().to_string(),
        boundary: Boundary::Periodic,
        wavelet_coefficients,
        scaling_coefficients: v,
    })
}

/// Circulant matrix whose row `t`, column `s` holds `f°[(t - s) mod N]`.
fn circulant(f: &[f64], n: usize) -> Vec<Vec<f64>> {
    let f = periodize(f, n);
    let mut full = vec![0.0; n];
    full[..f.len()].copy_from_slice(&f);
    (0..n)
        .map(|t| (0..n).map(|s| full[(t + n - s) % n]).collect())
        .collect()
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

fn mat_t_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|s| (0..n).map(|t| a[t][s] * x[t]).sum())
        .collect()
}

/// Same output as [`modwt_forward`] computed by explicit `N×N` circulant
/// matrix products. Quadratic in `N`; intended for testing.
pub fn modwt_matrix_oracle(series: &[f64], levels: usize, filter: &FilterPair) -> Result<WaveletDecomposition> {
    check_input(series, levels)?;
    let n = series.len();
    if n > ORACLE_MAX_LEN {
        return Err(Error::InvalidParameter(format!(
            "matrix oracle limited to N <= {ORACLE_MAX_LEN}"
        )));
    }
    let mut details = Vec::with_capacity(levels);
    let mut wavelet_coefficients = Vec::with_capacity(levels);
    let mut top = None;
    for j in 1..=levels {
        let f = modwt_filters(filter, j)?;
        let u = circulant(&f.wavelet, n);
        let w = mat_vec(&u, series);
        details.push(mat_t_vec(&u, &w));
        wavelet_coefficients.push(w);
        top = Some(f);
    }
    let v_mat = circulant(&top.expect("levels >= 1").scaling, n);
    let v = mat_vec(&v_mat, series);
    let smooth = mat_t_vec(&v_mat, &v);
    Ok(WaveletDecomposition {
        details,
        smooth,
        levels,
        filter: filter.name().to_string(),
        boundary: Boundary::Periodic,
        wavelet_coefficients,
        scaling_coefficients: v,
    })
}

/// Pointwise sum of all details and the smooth.
pub fn mra_reconstruct(decomp: &WaveletDecomposition) -> Result<Vec<f64>> {
    let n = decomp.smooth.len();
    if decomp.details.len() != decomp.levels {
        return Err(Error::LengthMismatch {
            expected: decomp.levels,
            got: decomp.details.len(),
        });
    }
    let mut out = decomp.smooth.clone();
    for d in &decomp.details {
        if d.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: d.len(),
            });
        }
        for (o, v) in out.iter_mut().zip(d) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn haar_properties() {
        let f = haar_filter();
        let e: f64 = f.scaling().iter().map(|x| x * x).sum();
        assert!((e - 1.0).abs() < 1e-12);
        let dot: f64 = f.scaling().iter().zip(f.wavelet()).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
        assert!(f.is_quadrature_mirror());
        assert_eq!(f.scaling()[0], -f.wavelet()[1]);
        assert_eq!(f.scaling()[1], f.wavelet()[0]);
    }

    #[test]
    fn rejects_bad_filters() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert!(FilterPair::new("bad", vec![1.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(FilterPair::new("odd", vec![1.0], vec![1.0]).is_err());
        // unit energy but wrong mirror sign
        assert!(FilterPair::new("flip", vec![c, c], vec![-c, -c]).is_err());
        assert!(FilterPair::new("ok", vec![c, c], vec![c, -c]).is_ok());
    }

    #[test]
    fn daubechies4_is_accepted() {
        let s3 = 3f64.sqrt();
        let d = 4.0 * 2f64.sqrt();
        let g = vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
        let m = g.len();
        let h: Vec<f64> = (0..m)
            .map(|i| if i % 2 == 0 { g[m - 1 - i] } else { -g[m - 1 - i] })
            .collect();
        let pair = FilterPair::new("d4", g, h).unwrap();
        let y: Vec<f64> = (0..37).map(|i| ((i * 7) % 11) as f64 - 3.0).collect();
        let dec = modwt_forward(&y, 3, &pair).unwrap();
        assert!(max_abs_diff(&mra_reconstruct(&dec).unwrap(), &y) < 1e-10);
        let w = modwt_filters(&pair, 3).unwrap();
        assert_eq!(w.width, 7 * 3 + 1);
    }

    #[test]
    fn level_one_haar_filters() {
        let f = modwt_filters(&haar_filter(), 1).unwrap();
        assert!(max_abs_diff(&f.wavelet, &[0.5, -0.5]) < 1e-15);
        assert!(max_abs_diff(&f.scaling, &[0.5, 0.5]) < 1e-15);
        assert_eq!(f.width, 2);
        let energy: f64 = f.wavelet.iter().map(|x| x * x).sum();
        assert!((energy - 0.5).abs() < 1e-15);
    }

    #[test]
    fn level_three_width() {
        let f = modwt_filters(&haar_filter(), 3).unwrap();
        assert_eq!(f.width, 8);
        assert_eq!(f.wavelet.len(), 8);
        assert!(modwt_filters(&haar_filter(), 0).is_err());
    }

    #[test]
    fn haar_level_filters_have_closed_form() {
        // h~_j is 2^-j on the first half of its support and -2^-j on the second
        for j in 1..=6 {
            let f = modwt_filters(&haar_filter(), j).unwrap();
            let w = 1usize << j;
            let a = 1.0 / w as f64;
            for m in 0..w {
                let expected_h = if m < w / 2 { a } else { -a };
                assert!((f.wavelet[m] - expected_h).abs() < 1e-15);
                assert!((f.scaling[m] - a).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn worked_example_coefficients() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let dec = modwt_forward(&y, 1, &haar_filter()).unwrap();
        assert!(max_abs_diff(&dec.wavelet_coefficients[0], &[-1.5, 0.5, 0.5, 0.5]) < 1e-15);
        let oracle = modwt_matrix_oracle(&y, 1, &haar_filter()).unwrap();
        assert!(max_abs_diff(&dec.details[0], &oracle.details[0]) < 1e-12);
        assert!(max_abs_diff(&dec.smooth, &oracle.smooth) < 1e-12);
        assert!(max_abs_diff(&mra_reconstruct(&dec).unwrap(), &y) < 1e-12);
    }

    #[test]
    fn constant_series() {
        let y = vec![3.25; 17];
        for j in 1..=5 {
            let dec = modwt_forward(&y, j, &haar_filter()).unwrap();
            assert_eq!(dec.component_count(), j + 1);
            for d in &dec.details {
                assert!(d.iter().all(|v| v.abs() < 1e-12));
            }
            assert!(dec.smooth.iter().all(|v| (v - 3.25).abs() < 1e-12));
            let oracle = modwt_matrix_oracle(&y, j, &haar_filter()).unwrap();
            assert!(max_abs_diff(&oracle.smooth, &dec.smooth) < 1e-12);
        }
    }

    #[test]
    fn levels_beyond_log2_still_reconstruct() {
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let dec = modwt_forward(&y, 6, &haar_filter()).unwrap();
        assert!(max_abs_diff(&mra_reconstruct(&dec).unwrap(), &y) < 1e-9);
        let oracle = modwt_matrix_oracle(&y, 6, &haar_filter()).unwrap();
        assert!(max_abs_diff(&oracle.details[5], &dec.details[5]) < 1e-12);
    }

    #[test]
    fn input_errors() {
        let f = haar_filter();
        assert!(matches!(modwt_forward(&[1.0], 1, &f), Err(Error::TooShort { .. })));
        assert!(modwt_forward(&[1.0, 2.0], 0, &f).is_err());
        assert!(matches!(
            modwt_forward(&[1.0, f64::NAN], 1, &f),
            Err(Error::NonFinite { row: 2 })
        ));
        assert!(modwt_matrix_oracle(&vec![0.0; 513], 1, &f).is_err());
    }

    #[test]
    fn zeroed_details_give_smooth() {
        let y: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let mut dec = modwt_forward(&y, 3, &haar_filter()).unwrap();
        for d in dec.details.iter_mut() {
            d.iter_mut().for_each(|v| *v = 0.0);
        }
        assert_eq!(mra_reconstruct(&dec).unwrap(), dec.smooth);
        dec.details[1].pop();
        assert!(mra_reconstruct(&dec).is_err());
    }

    #[test]
    fn long_series_six_components() {
        let y: Vec<f64> = (0..560)
            .map(|t| {
                let t = t as f64;
                50.0 + 40.0 * (2.0 * std::f64::consts::PI * t / 52.0).sin() + 0.05 * t
            })
            .collect();
        let dec = modwt_forward(&y, 5, &haar_filter()).unwrap();
        assert_eq!(dec.components().count(), 6);
        let rec = mra_reconstruct(&dec).unwrap();
        let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_abs_diff(&rec, &y) / scale < 1e-8);
    }

    #[test]
    fn haar_coefficients_are_additive_and_causal() {
        let y: Vec<f64> = (0..70).map(|t| ((t * 29) % 11) as f64 + 0.3 * t as f64).collect();
        let dec = modwt_forward(&y, 4, &haar_filter()).unwrap();
        let mut sum = vec![0.0; y.len()];
        for c in dec.coefficient_components() {
            for (s, v) in sum.iter_mut().zip(c) {
                *s += v;
            }
        }
        assert!(max_abs_diff(&sum, &y) < 1e-10);

        let mut bumped = y.clone();
        *bumped.last_mut().unwrap() += 100.0;
        let other = modwt_forward(&bumped, 4, &haar_filter()).unwrap();
        // widest level-4 filter spans 16 samples
        for (a, b) in dec.coefficient_components().zip(other.coefficient_components()) {
            assert_eq!(a[15..69], b[15..69]);
        }
    }

    fn series_and_levels() -> impl Strategy<Value = (Vec<f64>, usize)> {
        (8usize..96, 1usize..5)
            .prop_flat_map(|(n, j)| (prop::collection::vec(-1e3f64..1e3, n), Just(j)))
    }

    proptest! {
        #[test]
        fn shift_covariance((y, j) in series_and_levels(), k in 0usize..96) {
            let k = k % y.len();
            let mut shifted = y.clone();
            shifted.rotate_right(k);
            let a = modwt_forward(&y, j, &haar_filter()).unwrap();
            let b = modwt_forward(&shifted, j, &haar_filter()).unwrap();
            for (ca, cb) in a.components().zip(b.components()) {
                let mut ca = ca.to_vec();
                ca.rotate_right(k);
                prop_assert!(max_abs_diff(&ca, cb) < 1e-10);
            }
        }

        #[test]
        fn linearity((x, j) in series_and_levels(), a in -5.0f64..5.0, b in -5.0f64..5.0, seed in 0u64..1000) {
            let y: Vec<f64> = (0..x.len()).map(|i| (((i as u64 + seed) * 2654435761) % 1000) as f64 - 500.0).collect();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let dx = modwt_forward(&x, j, &haar_filter()).unwrap();
            let dy = modwt_forward(&y, j, &haar_filter()).unwrap();
            let dc = modwt_forward(&combo, j, &haar_filter()).unwrap();
            for ((cx, cy), cc) in dx.components().zip(dy.components()).zip(dc.components()) {
                let lin: Vec<f64> = cx.iter().zip(cy).map(|(p, q)| a * p + b * q).collect();
                prop_assert!(max_abs_diff(&lin, cc) < 1e-8);
            }
        }
    }
}
