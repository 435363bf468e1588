//! Text round-trip helpers: all numeric output is written with 17
//! significant digits so matrices survive a write/read cycle bit-exactly.

use crate::error::{CliError, CliResult};
use pregc_core::Mat;
use std::fs;
use std::path::Path;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Dense matrix as comma-separated rows, no header.
pub fn write_matrix(path: &Path, m: &Mat) -> CliResult<()> {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| format_float(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_matrix(path: &Path) -> CliResult<Mat> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::parse(path, lineno + 1, format!("bad number {field:?}"))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::parse(
                    path,
                    lineno + 1,
                    format!("expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, 1, "empty matrix file"));
    }
    Mat::from_rows(&rows).map_err(CliError::Core)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        source: e,
    })
}

/// FNV-1a over the canonical config echo; recorded in every report so a
/// metrics file can be traced to the exact configuration that produced it.
pub fn fnv1a64(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
