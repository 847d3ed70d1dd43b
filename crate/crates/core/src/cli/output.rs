use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Exit codes of the command-line front end.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const VIOLATION: i32 = 1;
    pub const INCONCLUSIVE: i32 = 2;
    pub const BLOW_UP: i32 = 3;
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    /// Data rows, header excluded.
    pub rows: usize,
}

/// `manifest.json`. Everything in it is a function of config and seed; wall
/// times and the worker count go to `timings.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    /// Config echo without `workers` and `output_dir`.
    pub config: ExperimentConfig,
    pub exit_code: i32,
    pub outputs: Vec<OutputFile>,
    pub timings_file: String,
    pub results: serde_json::Value,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

/// The JSON schema `manifest.json` follows.
pub const MANIFEST_SCHEMA: &str = include_str!("../../schemas/run_manifest.schema.json");

#[derive(Debug, Clone, Serialize)]
struct Stage {
    name: String,
    millis: f64,
}

#[derive(Debug, Serialize)]
struct Timings {
    workers: usize,
    stages: Vec<Stage>,
}

pub struct Timer {
    stages: Vec<Stage>,
    last: Instant,
}

impl Timer {
    pub fn new() -> Self {
        Self {
            stages: Vec::new(),
            last: Instant::now(),
        }
    }

    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push(Stage {
            name: name.into(),
            millis: (now - self.last).as_secs_f64() * 1e3,
        });
        self.last = now;
    }
}

impl Default for Timer {
    fn default() -> Self {
        Self::new()
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("{}: {e}", path.display()))
}

/// Output directory with an inventory of what was written.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        w.write_record(header).map_err(|e| io_error(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        self.files.push(OutputFile {
            file: name.into(),
            rows: rows.len(),
        });
        Ok(())
    }

    /// Register a CSV written elsewhere.
    pub fn register(&mut self, name: &str, rows: usize) {
        self.files.push(OutputFile {
            file: name.into(),
            rows,
        });
    }

    pub fn finish(
        self,
        mut manifest: RunManifest,
        timer: Timer,
        workers: usize,
    ) -> Result<RunManifest> {
        manifest.outputs = self.files;
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        let timings = Timings {
            workers,
            stages: timer.stages,
        };
        let path = self.dir.join(TIMINGS_FILE);
        let text = serde_json::to_string_pretty(&timings).expect("timings serialize") + "\n";
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(manifest)
    }
}

/// Shortest round-trip decimal, `inf` and `NaN` spelled out.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
