//! Provenance envelopes and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Seed and config fingerprint stamped on every output.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub tool: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config_digest: String,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let config = config.provenance();
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        Self {
            schema_version: SCHEMA_VERSION,
            tool: format!("epicast {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            seed: config.seed,
            config_digest: digest.iter().map(|b| format!("{b:02x}")).collect(),
            config,
        }
    }

    /// One-line header for CSV outputs.
    pub fn csv_comment(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# {} {} seed={seed} config_digest={}\n",
            self.tool, self.command, self.config_digest
        )
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::output(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::output(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::output(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::output(path, e))?;
    tmp.persist(path).map_err(|e| CliError::output(path, e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// CSV text preceded by the provenance comment line.
pub fn write_csv(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut out = prov.csv_comment().into_bytes();
    {
        let mut w = csv_writer(&mut out);
        w.write_record(header).map_err(|e| CliError::Output(e.to_string()))?;
        for row in rows {
            w.write_record(row).map_err(|e| CliError::Output(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Output(e.to_string()))?;
    }
    write_atomic(path, &out)
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::Writer::from_writer(buf)
}

/// Wrap a payload with its provenance for JSON output.
#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    pub provenance: &'a Provenance,
    #[serde(flatten)]
    pub payload: &'a T,
}
