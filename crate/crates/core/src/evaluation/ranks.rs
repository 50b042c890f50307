//! Per-case ranking of competing models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average ranks (1 = smallest) with ties sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Ranks of `M` models over `D` cases (dataset × horizon), one row per case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub metric: String,
    pub models: Vec<String>,
    pub cases: Vec<String>,
    pub ranks: Vec<Vec<f64>>,
}

impl RankTable {
    /// Validate and wrap a rank matrix. Every entry must be a whole or half
    /// rank in `1..=M` and every row must sum to `M(M+1)/2`; mean ranks
    /// averaged over cases fail this check.
    pub fn new(
        metric: impl Into<String>,
        models: Vec<String>,
        cases: Vec<String>,
        ranks: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = models.len();
        if m == 0 || cases.is_empty() {
            return Err(Error::InvalidData("rank table needs at least one model and one case".into()));
        }
        if ranks.len() != cases.len() {
            return Err(Error::LengthMismatch {
                expected: cases.len(),
                got: ranks.len(),
            });
        }
        let target = (m * (m + 1)) as f64 / 2.0;
        for (case, row) in cases.iter().zip(&ranks) {
            if row.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    got: row.len(),
                });
            }
            let valid = row
                .iter()
                .all(|&r| (1.0..=m as f64).contains(&r) && (2.0 * r).fract() == 0.0);
            let sum: f64 = row.iter().sum();
            if !valid || (sum - target).abs() > 1e-9 {
                return Err(Error::InvalidData(format!(
                    "row `{case}` is not a per-case ranking of {m} models \
                     (entries must be whole or half ranks summing to {target})"
                )));
            }
        }
        Ok(Self {
            metric: metric.into(),
            models,
            cases,
            ranks,
        })
    }

    /// Rank `scores` row by row, smaller being better.
    pub fn from_scores(
        metric: impl Into<String>,
        models: Vec<String>,
        cases: Vec<String>,
        scores: &[Vec<f64>],
    ) -> Result<Self> {
        for (i, row) in scores.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite score for model {} in case {}",
                    models.get(j).map_or("?", String::as_str),
                    cases.get(i).map_or("?", String::as_str)
                )));
            }
        }
        let ranks = scores.iter().map(|row| midranks(row)).collect();
        Self::new(metric, models, cases, ranks)
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn n_cases(&self) -> usize {
        self.cases.len()
    }

    /// Mean rank of every model across cases.
    pub fn mean_ranks(&self) -> Vec<f64> {
        let d = self.n_cases() as f64;
        (0..self.n_models())
            .map(|j| self.ranks.iter().map(|row| row[j]).sum::<f64>() / d)
            .collect()
    }

    /// CSV with header `case,<model>...`, one row per case.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["case".to_string()];
        header.extend(self.models.iter().cloned());
        w.write_record(&header)?;
        for (case, row) in self.cases.iter().zip(&self.ranks) {
            let mut rec = vec![case.clone()];
            rec.extend(row.iter().map(|r| r.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<rank table>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(metric: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("case") {
            return Err(Error::InvalidData(
                "rank table must start with a `case` column and hold one row of ranks per \
                 dataset × horizon case; mean ranks alone cannot be tested"
                    .into(),
            ));
        }
        let models: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut cases = Vec::new();
        let mut ranks = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            cases.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>().map_err(|_| Error::Parse {
                        row: i + 1,
                        value: v.to_string(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            ranks.push(row);
        }
        if cases.len() < 2 {
            return Err(Error::InvalidData(format!(
                "found {} case row(s); per-case ranks over at least two cases are required",
                cases.len()
            )));
        }
        Self::new(metric, models, cases, ranks)
    }

    pub fn load_csv(metric: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(metric, file)
    }
}
