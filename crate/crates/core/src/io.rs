//! Plain-text output: CSV with a header row, LF line endings and floats
//! printed with 17 significant digits, and pretty JSON.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::Result;

/// Shortest-roundtrip is not stable across formatters; 17 significant digits
/// in scientific notation is, and it round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    std::fs::write(path, csv_string(header, rows))?;
    Ok(())
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, json_string(value)?)?;
    Ok(())
}
