use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::DerivedParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Ok,
    Unreliable,
    Failed,
}

/// Everything needed to reproduce a run, plus what happened.
///
/// `manifest_sha256` covers the command, code version, inputs and derived
/// parameters only; timestamps and the output location are excluded, so
/// two runs of the same manifest write byte-identical data files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub manifest_sha256: String,
    pub inputs: Value,
    pub derived: Option<DerivedParams>,
    pub started: String,
    pub finished: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub discard_fraction: Option<f64>,
    pub diagnostics: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn manifest_hash(
    command: &str,
    inputs: &Value,
    derived: Option<&DerivedParams>,
) -> Result<String> {
    let mut inputs = inputs.clone();
    if let Value::Object(map) = &mut inputs {
        map.remove("output_dir");
    }
    let canonical = serde_json::to_vec(&serde_json::json!({
        "command": command,
        "code_version": CODE_VERSION,
        "inputs": inputs,
        "derived": derived,
    }))?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

/// Writes `bytes` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Shortest round-trip decimal form; `NaN` for missing error bars.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

/// An in-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// CSV text preceded by a `# manifest-sha256: <hex>` comment line.
    pub fn render(&self, hash: &str) -> Result<Vec<u8>> {
        let mut out = format!("# manifest-sha256: {hash}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header).map_err(std::io::Error::from)?;
            for r in &self.rows {
                w.write_record(r).map_err(std::io::Error::from)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

/// Output directory of one run. The manifest is written on `finish`
/// whether or not the run succeeded.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunWriter {
    pub fn begin(
        dir: &Path,
        command: &str,
        inputs: Value,
        derived: Option<DerivedParams>,
    ) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let hash = manifest_hash(command, &inputs, derived.as_ref())?;
        let warnings = derived
            .as_ref()
            .map(|d| d.warnings.clone())
            .unwrap_or_default();
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                code_version: CODE_VERSION.to_string(),
                manifest_sha256: hash,
                inputs,
                derived,
                started: chrono::Utc::now().to_rfc3339(),
                finished: None,
                status: RunStatus::Running,
                error: None,
                discard_fraction: None,
                diagnostics: BTreeMap::new(),
                warnings,
                outputs: Vec::new(),
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.manifest.manifest_sha256
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        let bytes = table.render(&self.manifest.manifest_sha256)?;
        atomic_write(&self.dir.join(name), &bytes)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) {
        if let Ok(v) = serde_json::to_value(value) {
            self.manifest.diagnostics.insert(key.to_string(), v);
        }
    }

    pub fn finish(mut self, error: Option<&Error>, unreliable: bool) -> Result<RunManifest> {
        self.manifest.finished = Some(chrono::Utc::now().to_rfc3339());
        self.manifest.status = match (error, unreliable) {
            (Some(_), _) => RunStatus::Failed,
            (None, true) => RunStatus::Unreliable,
            (None, false) => RunStatus::Ok,
        };
        self.manifest.error = error.map(|e| e.to_string());
        let mut bytes = serde_json::to_vec_pretty(&self.manifest)?;
        bytes.push(b'\n');
        atomic_write(&self.dir.join("manifest.json"), &bytes)?;
        Ok(self.manifest)
    }
}
