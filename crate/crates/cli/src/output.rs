//! Atomic artefact writes and line-delimited JSON logging on stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use gazegate_core::audio::{write_wav, AudioBuffer, BitDepth};
use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Timestamp source; frozen clocks read zero so artefacts are reproducible.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    pub frozen: bool,
}

impl Clock {
    pub fn unix_seconds(&self) -> u64 {
        if self.frozen {
            return 0;
        }
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    }
}

/// One JSON object per line on stderr.
#[derive(Debug, Clone)]
pub struct Logger {
    pub command: &'static str,
    pub quiet: bool,
    pub clock: Clock,
}

impl Logger {
    pub fn info(&self, msg: &str, fields: Value) {
        if !self.quiet {
            self.emit("info", msg, fields);
        }
    }

    pub fn error(&self, msg: &str) {
        self.emit("error", msg, Value::Null);
    }

    fn emit(&self, level: &str, msg: &str, fields: Value) {
        let mut rec = Map::new();
        rec.insert("ts".into(), json!(self.clock.unix_seconds()));
        rec.insert("level".into(), json!(level));
        rec.insert("cmd".into(), json!(self.command));
        rec.insert("msg".into(), json!(msg));
        if let Value::Object(extra) = fields {
            rec.extend(extra);
        }
        eprintln!("{}", Value::Object(rec));
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let tmp = temp_path(path);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_wav_atomic(
    path: &Path,
    buffer: &AudioBuffer,
    depth: BitDepth,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let tmp = temp_path(path);
    write_wav(buffer, &tmp, depth)?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artefact serialises");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Expands glob patterns into a sorted, de-duplicated file list.
pub fn expand_globs(patterns: &[String]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in patterns {
        let paths =
            glob::glob(p).map_err(|e| CliError::Usage(format!("bad pattern `{p}`: {e}")))?;
        let mut found: Vec<PathBuf> = paths
            .filter_map(Result::ok)
            .filter(|p| p.is_file())
            .collect();
        if found.is_empty() {
            return Err(CliError::NoMatches(p.clone()));
        }
        out.append(&mut found);
    }
    out.sort();
    out.dedup();
    Ok(out)
}
