//! Forecasts produced outside this crate, read from CSV for ranked comparison.
//!
//! Expected columns: `dataset,horizon,step,point`, where `horizon` is the
//! number of test steps and `step` runs from 1 to `horizon`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct Row {
    dataset: String,
    horizon: usize,
    step: usize,
    point: f64,
}

/// Point forecasts of one external model keyed by (dataset, horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalForecasts {
    pub name: String,
    entries: BTreeMap<(String, usize), Vec<f64>>,
}

impl ExternalForecasts {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, dataset: impl Into<String>, point: Vec<f64>) -> Result<()> {
        if point.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(i) = point.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i + 1 });
        }
        self.entries.insert((dataset.into(), point.len()), point);
        Ok(())
    }

    pub fn get(&self, dataset: &str, horizon: usize) -> Option<&[f64]> {
        self.entries
            .get(&(dataset.to_string(), horizon))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(name: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(name, file)
    }

    pub fn read<R: std::io::Read>(name: impl Into<String>, reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut grouped: BTreeMap<(String, usize), Vec<Option<f64>>> = BTreeMap::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row?;
            let bad = |value: String| Error::Parse { row: i + 1, value };
            if !row.point.is_finite() {
                return Err(Error::NonFinite { row: i + 1 });
            }
            if row.step == 0 || row.step > row.horizon {
                return Err(bad(format!("step {} outside 1..={}", row.step, row.horizon)));
            }
            let slots = grouped
                .entry((row.dataset, row.horizon))
                .or_insert_with(|| vec![None; row.horizon]);
            if slots[row.step - 1].replace(row.point).is_some() {
                return Err(bad(format!("duplicate step {}", row.step)));
            }
        }
        let mut out = Self::new(name);
        for ((dataset, horizon), slots) in grouped {
            let present = slots.iter().flatten().count();
            let point = slots
                .into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or(Error::LengthMismatch {
                    expected: horizon,
                    got: present,
                })?;
            out.entries.insert((dataset, horizon), point);
        }
        if out.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(out)
    }
}
