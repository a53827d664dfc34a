//! CSV rendering with a `#` metadata header, written atomically.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::run::{ExperimentOutput, ExperimentRecord};
use crate::error::Result;

/// Prefix of the only header line that changes between identical runs.
pub const TIMESTAMP_PREFIX: &str = "# generated_unix:";

/// SHA-256 of the canonical config JSON, ignoring the output path.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.output = None;
    let digest = Sha256::digest(c.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn header(output: &ExperimentOutput) -> Vec<String> {
    let mut h: Vec<String> = ["point", "cov_model", "M", "K", "L", "snr0_db", "trial"].iter().map(|s| s.to_string()).collect();
    for name in output.columns.metrics.iter().chain(&output.columns.errors) {
        h.push(name.to_string());
        h.push(format!("{name}_se"));
    }
    h.extend(output.columns.diagnostics.iter().map(|s| s.to_string()));
    h.push("notes".into());
    h
}

fn row(output: &ExperimentOutput, r: &ExperimentRecord) -> Vec<String> {
    let mut v = vec![
        r.point.to_string(),
        r.cov_model.clone(),
        r.m.to_string(),
        r.k.to_string(),
        r.l.map(|l| l.to_string()).unwrap_or_default(),
        fmt_f64(r.snr0_db),
        r.trial.to_string(),
    ];
    for name in output.columns.metrics.iter().chain(&output.columns.errors) {
        match r.metric(name) {
            Some(m) => {
                v.push(fmt_f64(m.value));
                v.push(m.std_err.map(fmt_f64).unwrap_or_default());
            }
            None => v.extend([String::new(), String::new()]),
        }
    }
    for name in &output.columns.diagnostics {
        v.push(r.diagnostic(name).map(fmt_f64).unwrap_or_default());
    }
    v.push(r.notes.join(";"));
    v
}

/// Full CSV text. `timestamp` adds the `generated_unix` line.
pub fn render_csv(config: &ExperimentConfig, output: &ExperimentOutput, timestamp: Option<u64>) -> Result<String> {
    let mut text = String::new();
    text.push_str(&format!("# csi-deteq {}\n", env!("CARGO_PKG_VERSION")));
    if !config.name.is_empty() {
        text.push_str(&format!("# experiment: {}\n", config.name));
    }
    text.push_str(&format!("# config_sha256: {}\n", config_hash(config)));
    text.push_str(&format!("# seed: {}\n", config.seed));
    if let Some(t) = timestamp {
        text.push_str(&format!("{TIMESTAMP_PREFIX} {t}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(output))?;
    for r in &output.records {
        w.write_record(row(output, r))?;
    }
    let body = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    text.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    Ok(text)
}

/// Writes `text` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Renders with the current time and writes atomically.
pub fn write_csv(config: &ExperimentConfig, output: &ExperimentOutput, path: &Path) -> Result<()> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    write_atomic(path, &render_csv(config, output, Some(now))?)
}

/// Drops the timestamp line, for comparing runs.
pub fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with(TIMESTAMP_PREFIX)).map(|l| format!("{l}\n")).collect()
}
