//! Output files: CSV with a commented header block, plus a JSON sidecar per
//! run. Nothing time- or host-dependent is written, so identical inputs give
//! identical bytes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Scenario;

pub const TOOL: &str = "cqed";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the scenario's canonical JSON form.
pub fn config_hash(scenario: &Scenario) -> String {
    let json = serde_json::to_vec(scenario).expect("scenario serializes");
    hex::encode(Sha256::digest(&json))
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Where a run writes and what every file header says about it.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub command: &'static str,
    pub dir: PathBuf,
    pub scenario: Scenario,
    pub hash: String,
}

impl RunContext {
    pub fn new(command: &'static str, dir: PathBuf, scenario: Scenario) -> Self {
        let hash = config_hash(&scenario);
        RunContext { command, dir, scenario, hash }
    }

    pub fn header(&self) -> Vec<(String, String)> {
        vec![
            ("tool".into(), format!("{TOOL} {VERSION}")),
            ("command".into(), self.command.into()),
            ("scenario".into(), self.scenario.name.clone()),
            ("config_sha256".into(), self.hash.clone()),
            ("seed".into(), self.scenario.seed.to_string()),
        ]
    }

    fn prepare(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).with_context(|| format!("cannot create {}", self.dir.display()))?;
        Ok(self.dir.join(name))
    }

    /// Writes a CSV table. `extra` lines go into the header after the run
    /// identification.
    pub fn write_csv<R, I>(&self, name: &str, extra: &[(String, String)], columns: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.prepare(name)?;
        let file = fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut out = BufWriter::new(file);
        for (k, v) in self.header().iter().chain(extra) {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(columns)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Writes a plain-text report with the same header block.
    pub fn write_text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.prepare(name)?;
        let mut text = String::new();
        for (k, v) in self.header() {
            text.push_str(&format!("# {k}: {v}\n"));
        }
        text.push_str(body);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    /// Writes `<command>.meta.json` with the resolved scenario and `extra`.
    pub fn write_sidecar<T: Serialize>(&self, files: &[PathBuf], extra: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Sidecar<'a, T> {
            tool: &'a str,
            version: &'a str,
            command: &'a str,
            config_sha256: &'a str,
            seed: u64,
            files: Vec<String>,
            results: &'a T,
            scenario: &'a Scenario,
        }
        let path = self.prepare(&format!("{}.meta.json", self.command))?;
        let sidecar = Sidecar {
            tool: TOOL,
            version: VERSION,
            command: self.command,
            config_sha256: &self.hash,
            seed: self.scenario.seed,
            files: files
                .iter()
                .map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
                .collect(),
            results: extra,
            scenario: &self.scenario,
        };
        let mut json = serde_json::to_string_pretty(&sidecar)?;
        json.push('\n');
        fs::write(&path, json).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

/// Shortest representation that reads back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
