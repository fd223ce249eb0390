//! Artifact files: raw and aggregate CSV, JSON summary, plot data, and the
//! human-readable report. Every file embeds the config hash. All writes go
//! through the coordinator thread.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use nbw_core::error::{Error, Result};
use nbw_core::experiments::Warning;

use crate::config::ExperimentConfig;

/// Stable hash of the resolved configuration (canonical JSON bytes).
/// The output section is excluded: where results are written does not
/// change what they are.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut normalized = cfg.clone();
    normalized.output = crate::config::OutputSection {
        dir: String::new(),
        raw: true,
        formats: Vec::new(),
    };
    let canonical = serde_json::to_string(&normalized).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

pub struct OutputWriter {
    pub dir: PathBuf,
    pub hash: String,
    pub write_csv: bool,
    pub write_json: bool,
    pub write_report: bool,
    pub write_raw: bool,
}

impl OutputWriter {
    pub fn new(cfg: &ExperimentConfig, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let formats = &cfg.output.formats;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            hash: config_hash(cfg),
            write_csv: formats.iter().any(|f| f == "csv"),
            write_json: formats.iter().any(|f| f == "json"),
            write_report: formats.iter().any(|f| f == "report"),
            write_raw: cfg.output.raw,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Creates or truncates a CSV with the hash banner and header line.
    pub fn start_csv(&self, name: &str, header: &str) -> Result<()> {
        let text = format!("# config {}\n{header}\n", self.hash);
        fs::write(self.path(name), text)?;
        Ok(())
    }

    pub fn append_csv(&self, name: &str, rows: &str) -> Result<()> {
        use std::io::Write;
        let mut f = fs::OpenOptions::new()
            .append(true)
            .open(self.path(name))?;
        f.write_all(rows.as_bytes())?;
        Ok(())
    }

    /// Full CSV in one shot.
    pub fn write_csv_file(&self, name: &str, header: &str, rows: &str) -> Result<()> {
        if !self.write_csv {
            return Ok(());
        }
        let text = format!("# config {}\n{header}\n{rows}", self.hash);
        fs::write(self.path(name), text)?;
        Ok(())
    }

    pub fn write_summary(&self, cfg: &ExperimentConfig, warnings: &[Warning], results: Value) -> Result<()> {
        if !self.write_json {
            return Ok(());
        }
        let summary = json!({
            "schema": crate::config::SCHEMA_VERSION,
            "config_hash": self.hash,
            "config": serde_json::to_value(cfg).expect("config serializes"),
            "kind": cfg.experiment.kind,
            "warnings": warnings
                .iter()
                .map(|w| json!({"code": w.code, "message": w.message}))
                .collect::<Vec<_>>(),
            "results": results,
        });
        fs::write(
            self.path("summary.json"),
            serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
        Ok(())
    }

    pub fn write_report(&self, cfg: &ExperimentConfig, warnings: &[Warning], body: &str) -> Result<()> {
        if !self.write_report {
            return Ok(());
        }
        let mut text = String::new();
        let _ = writeln!(text, "nbw run report");
        let _ = writeln!(text, "config hash: {}", self.hash);
        let _ = writeln!(text, "experiment:  {}", cfg.experiment.kind);
        let _ = writeln!(text, "seed:        {}", cfg.disorder.seed);
        let _ = writeln!(text);
        if warnings.is_empty() {
            let _ = writeln!(text, "warnings: none");
        } else {
            let _ = writeln!(text, "warnings ({}):", warnings.len());
            for w in warnings {
                let _ = writeln!(text, "  [{}] {}", w.code, w.message);
            }
        }
        let _ = writeln!(text);
        text.push_str(body);
        fs::write(self.path("report.txt"), text)?;
        Ok(())
    }

    /// Reads a raw CSV back, verifying the embedded hash; returns data rows.
    pub fn read_raw(&self, name: &str) -> Result<Option<Vec<String>>> {
        let path = self.path(name);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        let mut lines = text.lines();
        let banner = lines.next().unwrap_or_default();
        let expected = format!("# config {}", self.hash);
        if banner != expected {
            return Err(Error::InvalidParameter(format!(
                "{} belongs to a different configuration ({banner:?}); \
                 remove the output directory or point --out elsewhere",
                path.display()
            )));
        }
        let _header = lines.next();
        Ok(Some(lines.map(|l| l.to_string()).collect()))
    }
}

/// Checkpoint for resumable ensembles.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Checkpoint {
    pub config_hash: String,
    pub trials_done: usize,
    pub total_trials: usize,
}

impl Checkpoint {
    pub fn load(dir: &Path) -> Result<Option<Checkpoint>> {
        let path = dir.join("checkpoint.json");
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map(Some).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn store(&self, dir: &Path) -> Result<()> {
        fs::write(
            dir.join("checkpoint.json"),
            serde_json::to_string_pretty(self).expect("checkpoint serializes"),
        )?;
        Ok(())
    }

    pub fn clear(dir: &Path) -> Result<()> {
        let path = dir.join("checkpoint.json");
        if path.exists() {
            fs::remove_file(path)?;
        }
        Ok(())
    }
}

/// Formats a float with the shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}"))),
    }
}
