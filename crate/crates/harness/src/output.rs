//! Persistence: a CSV with one row per `m` and a sibling JSON holding the
//! configuration echo and the threshold marker.
//!
//! The CSV is UTF-8 with LF line endings and `.` as decimal separator; reals
//! carry 17 significant digits (`{:.16e}`), enough to round-trip an `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::experiment::ExperimentRecord;

pub const CSV_HEADER: &str = "m,success_rate,mean_constant,min_constant,counterexample_rate,seconds";

/// Contents of the JSON written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub config: ExperimentConfig,
    pub threshold_marker: usize,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv(rec: &ExperimentRecord) -> String {
    let mut out = String::with_capacity(64 * (rec.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rec.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m,
            real(r.success_rate),
            real(r.mean_constant),
            real(r.min_constant),
            real(r.counterexample_rate),
            real(r.seconds)
        );
    }
    out
}

/// Path of the JSON written next to `csv_path`.
pub fn sibling_json(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `path` (CSV) and its `.json` sibling.
pub fn write_results(rec: &ExperimentRecord, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, to_csv(rec)).map_err(io(path))?;
    let json_path = sibling_json(path);
    let meta = RecordMeta { config: rec.config.clone(), threshold_marker: rec.threshold_marker };
    let mut text = serde_json::to_string_pretty(&meta)
        .map_err(|source| HarnessError::Json { path: json_path.clone(), source })?;
    text.push('\n');
    fs::write(&json_path, text).map_err(io(&json_path))?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<RecordMeta, HarnessError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })
}
