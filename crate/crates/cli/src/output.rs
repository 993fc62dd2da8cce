//! Table writers and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Collects the files of one run and writes them, plus the manifest, at the end.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    started: Instant,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), format, started: Instant::now(), written: Vec::new() })
    }

    pub fn table<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), CliError> {
        let file = format!("{name}.{}", self.format.extension());
        let path = self.dir.join(&file);
        let io = |e: String| CliError::Io(format!("{}: {e}", path.display()));
        match self.format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path).map_err(|e| io(e.to_string()))?;
                for r in rows {
                    w.serialize(r).map_err(|e| io(e.to_string()))?;
                }
                w.flush().map_err(|e| io(e.to_string()))?;
            }
            Format::Json => {
                let text = serde_json::to_string_pretty(rows).map_err(|e| io(e.to_string()))?;
                fs::write(&path, text + "\n").map_err(|e| io(e.to_string()))?;
            }
        }
        self.written.push(file);
        Ok(())
    }

    /// Writes `manifest.json` with the resolved configuration and key results.
    pub fn finish(self, command: &str, config: Value, summary: Value) -> Result<(), CliError> {
        let manifest = json!({
            "schema": 1,
            "command": command,
            "config": config,
            "format": self.format,
            "library_version": lll_core::VERSION,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "files": self.written,
            "summary": summary,
        });
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
