use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use crate::error::CliError;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV file with a header row; every record is written on `finish`.
pub struct CsvReport {
    path: PathBuf,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvReport {
    pub fn new(path: &Path, header: &[&'static str]) -> Self {
        Self {
            path: path.to_path_buf(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    pub fn finish(self) -> Result<(), CliError> {
        let err = |e: csv::Error| CliError::output(&self.path, e);
        let mut w = csv::Writer::from_path(&self.path).map_err(err)?;
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::output(&self.path, e))
    }
}

/// Provenance record written next to every output file as `<file>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub versions: String,
    pub prng: &'static str,
    pub started_at: String,
    pub finished_at: String,
}

pub struct ManifestBuilder {
    command: String,
    parameters: BTreeMap<String, serde_json::Value>,
    seed: Option<u64>,
    started_at: String,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl ManifestBuilder {
    pub fn start(command: &str, args: &impl Serialize, seed: Option<u64>) -> Self {
        let parameters = match serde_json::to_value(args) {
            Ok(serde_json::Value::Object(map)) => map.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        Self {
            command: command.to_string(),
            parameters,
            seed,
            started_at: now(),
        }
    }

    /// Writes the manifest for each output in `outputs`.
    pub fn write_for(self, outputs: &[&Path]) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command,
            parameters: self.parameters,
            seed: self.seed,
            versions: format!("sepfista {}", env!("CARGO_PKG_VERSION")),
            prng: sepfista::datagen::RNG_ALGORITHM,
            started_at: self.started_at,
            finished_at: now(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        for out in outputs {
            let path = manifest_path(out);
            fs::write(&path, &text).map_err(|e| CliError::output(&path, e))?;
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    fs::write(path, text).map_err(|e| CliError::output(path, e))
}
