//! Bit-stable result formatting: every number in a CSV is written with
//! twelve significant digits in scientific notation, and JSON summaries
//! serialize resolved structs whose field order never varies.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result};

/// Fixed scientific rendering used for every CSV value.
pub fn sci(value: f64) -> String {
    if value.is_nan() {
        "NaN".into()
    } else {
        format!("{value:.11e}")
    }
}

/// Renders one table as CSV with a header row, quoting only when a field
/// demands it.
pub fn csv_table(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Pool(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is always utf-8"))
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}
