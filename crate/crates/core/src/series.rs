//! Time-series container, train/validation/test split sizing, and CSV ingestion.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observations-per-cycle tag attached to a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Weekly,
    Monthly,
    #[default]
    Unspecified,
}

impl Frequency {
    pub fn period(self) -> usize {
        match self {
            Frequency::Weekly => 52,
            Frequency::Monthly => 12,
            Frequency::Unspecified => 1,
        }
    }
}

impl std::str::FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weekly" | "52" => Ok(Frequency::Weekly),
            "monthly" | "12" => Ok(Frequency::Monthly),
            "unspecified" | "none" | "1" => Ok(Frequency::Unspecified),
            other => Err(Error::InvalidParameter(format!("unknown frequency `{other}`"))),
        }
    }
}

/// An ordered, finite, non-empty sequence of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    frequency: Frequency,
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_frequency(values, Frequency::Unspecified)
    }

    pub fn with_frequency(values: Vec<f64>, frequency: Frequency) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i + 1 });
        }
        Ok(Self {
            values,
            frequency,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                expected: self.values.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn set_frequency(&mut self, frequency: Frequency) {
        self.frequency = frequency;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sizes of the three contiguous windows used in backtesting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_len: usize,
    pub val_len: usize,
    pub test_len: usize,
}

impl SplitSpec {
    /// Minimum training length accepted by any split.
    pub const MIN_TRAIN: usize = 3;

    /// Split a series of length `n` with a validation window twice the test window.
    pub fn for_horizon(n: usize, test_len: usize) -> Result<Self> {
        Self::new(n, 2 * test_len, test_len)
    }

    pub fn new(n: usize, val_len: usize, test_len: usize) -> Result<Self> {
        if test_len == 0 {
            return Err(Error::InvalidParameter("test window must be non-empty".into()));
        }
        let held_out = val_len + test_len;
        if n < held_out + Self::MIN_TRAIN {
            return Err(Error::TooShort {
                needed: held_out + Self::MIN_TRAIN,
                got: n,
            });
        }
        Ok(Self {
            train_len: n - held_out,
            val_len,
            test_len,
        })
    }

    pub fn total(&self) -> usize {
        self.train_len + self.val_len + self.test_len
    }

    /// Borrow the (train, val, test) windows of `values`.
    pub fn slices<'a>(&self, values: &'a [f64]) -> Result<(&'a [f64], &'a [f64], &'a [f64])> {
        if values.len() != self.total() {
            return Err(Error::LengthMismatch {
                expected: self.total(),
                got: values.len(),
            });
        }
        let (train, rest) = values.split_at(self.train_len);
        let (val, test) = rest.split_at(self.val_len);
        Ok((train, val, test))
    }
}

/// Read a single-column series from a headed CSV file.
///
/// Rows are taken in file order. Row numbers in errors are 1-based and count
/// data rows only (the header is not row 1).
pub fn load_csv(
    path: impl AsRef<Path>,
    value_column: &str,
    label_column: Option<&str>,
) -> Result<TimeSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, value_column, label_column)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(
    reader: R,
    value_column: &str,
    label_column: Option<&str>,
) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let value_idx = find(value_column)?;
    let label_idx = label_column.map(find).transpose()?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let raw = record.get(value_idx).unwrap_or("");
        let v: f64 = raw.parse().map_err(|_| Error::Parse {
            row,
            value: raw.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFinite { row });
        }
        values.push(v);
        if let Some(li) = label_idx {
            labels.push(record.get(li).unwrap_or("").to_string());
        }
    }
    let series = TimeSeries::new(values)?;
    if label_idx.is_some() {
        series.with_labels(labels)
    } else {
        Ok(series)
    }
}
