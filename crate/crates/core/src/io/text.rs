//! Plain-text matrix, label and partition files.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Comma-separated rows, no header.
pub fn format_matrix_csv(a: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in a.outer_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(a: &Array2<f64>, path: &Path) -> Result<()> {
    fs::write(path, format_matrix_csv(a)).map_err(|e| Error::io(path, e))
}

/// Parses a numeric CSV. An empty file yields a `0 × 0` matrix.
pub fn parse_matrix_csv(text: &str, path: &Path, skip_header: bool) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if skip_header && idx == 0 {
            continue;
        }
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("invalid number {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        message: format!("non-finite value {field:?}"),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Ok(Array2::from_shape_vec((n, m), rows.into_iter().flatten().collect())
        .expect("rows have equal length"))
}

pub fn read_matrix_csv(path: &Path, skip_header: bool) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(&text, path, skip_header)
}

/// One nonnegative integer per line.
pub fn write_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(out, "{l}").expect("write to string");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("invalid label {l:?}"),
            })
        })
        .collect()
}

pub const PARTITION_HEADER: &str = "node_index,cluster_id";

/// `node_index,cluster_id` CSV with header.
pub fn format_partition_csv(assignments: &[usize]) -> String {
    let mut out = String::from(PARTITION_HEADER);
    out.push('\n');
    for (i, c) in assignments.iter().enumerate() {
        writeln!(out, "{i},{c}").expect("write to string");
    }
    out
}

pub fn write_partition_csv(assignments: &[usize], path: &Path) -> Result<()> {
    fs::write(path, format_partition_csv(assignments)).map_err(|e| Error::io(path, e))
}

/// Reads cluster ids from either a `node_index,cluster_id` CSV (rows in any
/// order, indices `0..n`) or a bare one-label-per-line file.
pub fn read_assignments(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or("").trim();
    if first != PARTITION_HEADER {
        return read_labels(path);
    }
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut pairs = Vec::new();
    for (idx, l) in text.lines().enumerate().skip(1) {
        if l.trim().is_empty() {
            continue;
        }
        let (a, b) = l
            .split_once(',')
            .ok_or_else(|| parse_err(idx + 1, "expected node_index,cluster_id".into()))?;
        let node: usize = a
            .trim()
            .parse()
            .map_err(|_| parse_err(idx + 1, format!("invalid node index {a:?}")))?;
        let cluster: usize = b
            .trim()
            .parse()
            .map_err(|_| parse_err(idx + 1, format!("invalid cluster id {b:?}")))?;
        pairs.push((idx + 1, node, cluster));
    }
    let n = pairs.len();
    let mut out = vec![usize::MAX; n];
    for (line, node, cluster) in pairs {
        if node >= n || out[node] != usize::MAX {
            return Err(parse_err(line, format!("node index {node} is out of range or repeated")));
        }
        out[node] = cluster;
    }
    Ok(out)
}
