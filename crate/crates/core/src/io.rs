//! File formats.
//!
//! Matrices are headerless CSV with one ambient coordinate per row and one
//! point per column. Label files hold one 0-based integer per line. Results
//! and benchmark tables are JSON; benchmarks also get flat CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkTable, Method};
use crate::error::{Error, Result};
use crate::model::{ClusteringResult, DataMatrix, HyperParams, IterationRecord, StopReason};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses a headerless CSV matrix. Blank lines are skipped.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                col: c + 1,
                message: format!("`{}` is not a number", field.trim()),
            })?;
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    col: row.len().min(w) + 1,
                    message: format!("row has {} fields, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    let cols = width.ok_or(Error::Parse {
        line: 1,
        col: 1,
        message: "empty matrix".into(),
    })?;
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_raw_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&read_text(path)?)
}

/// Reads and validates a data matrix.
pub fn read_matrix(path: &Path) -> Result<DataMatrix> {
    DataMatrix::new(read_raw_matrix(path)?)
}

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(path, &format_matrix(m))
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                col: 1,
                message: format!("`{}` is not a non-negative integer label", l.trim()),
            })
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels(&read_text(path)?)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        writeln!(out, "{l}").expect("writing to a String");
    }
    write_text(path, &out)
}

/// Parses `key = value` lines. `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            col: 1,
            message: "expected key = value".into(),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                col: 1,
                message: "empty key".into(),
            });
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
    pub version: String,
    pub seed: u64,
}

impl Meta {
    pub fn now(seed: u64) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            timestamp,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
        }
    }
}

/// Configuration echoed into a result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub method: Method,
    pub clusters: usize,
    pub normalize: bool,
    #[serde(flatten)]
    pub hyper: HyperParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub history: Vec<IterationRecord>,
    pub params: RunEcho,
    pub warnings: Vec<String>,
    pub meta: Meta,
}

impl ResultDocument {
    pub fn new(result: &ClusteringResult, params: RunEcho, meta: Meta) -> Self {
        Self {
            labels: result.labels.clone(),
            iterations: result.iterations,
            stop_reason: result.stop_reason,
            history: result.history.clone(),
            params,
            warnings: result.warnings.iter().map(|w| w.to_string()).collect(),
            meta,
        }
    }

    fn check(&self) -> Result<()> {
        if self.history.is_empty() {
            return Err(Error::InvalidResult("history is empty".into()));
        }
        if self.history.len() != self.iterations {
            return Err(Error::InvalidResult(format!(
                "{} history records for {} iterations",
                self.history.len(),
                self.iterations
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.check()?;
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidResult(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            col: e.column(),
            message: e.to_string(),
        })?;
        doc.check()?;
        Ok(doc)
    }
}

pub fn write_result(path: &Path, doc: &ResultDocument) -> Result<()> {
    let mut json = doc.to_json()?;
    json.push('\n');
    write_text(path, &json)
}

pub fn read_result(path: &Path) -> Result<ResultDocument> {
    ResultDocument::from_json(&read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkDocument {
    pub table: BenchmarkTable,
    pub meta: Meta,
}

/// Column name of a grid cell, e.g. `C2@0.5`.
pub fn cell_name(clusters: usize, ratio: f64) -> String {
    format!("C{clusters}@{ratio}")
}

/// One row per method, one column per (C, ratio) cell.
fn method_by_cell_csv(table: &BenchmarkTable, value: impl Fn(&crate::bench::CellSummary) -> f64) -> String {
    let cells = table.grid.cells();
    let mut out = String::from("method");
    for &(c, r) in &cells {
        write!(out, ",{}", cell_name(c, r)).expect("writing to a String");
    }
    out.push('\n');
    for &method in &table.grid.methods {
        out.push_str(&method.to_string());
        for &(c, r) in &cells {
            let v = table.cell(c, r, method).map(&value).unwrap_or(f64::NAN);
            write!(out, ",{}", format_f64(v)).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Raw per-trial values, in job order.
pub fn trials_csv(table: &BenchmarkTable) -> String {
    let mut out = String::from("clusters,ratio,trial,method,data_hash,misclassification,ssr,iterations,stop_reason\n");
    for t in &table.trials {
        writeln!(
            out,
            "{},{},{},{},{:016x},{},{},{},{}",
            t.clusters,
            t.ratio,
            t.trial,
            t.method,
            t.data_hash,
            format_f64(t.misclassification),
            format_f64(t.ssr),
            t.iterations,
            t.stop_reason
        )
        .expect("writing to a String");
    }
    out
}

fn failures_csv(table: &BenchmarkTable) -> String {
    let mut out = String::from("clusters,ratio,trial,method,message\n");
    for f in &table.failures {
        let method = f.method.map(|m| m.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},\"{}\"",
            f.clusters,
            f.ratio,
            f.trial,
            method,
            f.message.replace('"', "\"\"")
        )
        .expect("writing to a String");
    }
    out
}

/// Trial-averaged error per iteration of the regular runs.
fn error_trace_csv(table: &BenchmarkTable) -> String {
    let mut out = String::from("clusters,ratio,method,t,mean_error\n");
    for cell in &table.cells {
        for (i, v) in cell.mean_error_trace.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                cell.clusters,
                cell.ratio,
                cell.method,
                i + 1,
                format_f64(*v)
            )
            .expect("writing to a String");
        }
    }
    out
}

/// Trial-averaged uncertain fraction and error of the runs capped only by
/// the iteration count.
fn kappa_trace_csv(table: &BenchmarkTable) -> String {
    let mut out = String::from("clusters,ratio,method,t,mean_kappa_fraction,mean_error\n");
    for cell in &table.cells {
        if let Some(tr) = &cell.mean_unconstrained {
            for (i, (k, e)) in tr.kappa_fraction.iter().zip(&tr.error).enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    cell.clusters,
                    cell.ratio,
                    cell.method,
                    i + 1,
                    format_f64(*k),
                    format_f64(*e)
                )
                .expect("writing to a String");
            }
        }
    }
    out
}

pub const BENCHMARK_FILES: [&str; 8] = [
    "table1_mean_error.csv",
    "table1_median_error.csv",
    "table2_mean_ssr.csv",
    "trials.csv",
    "failures.csv",
    "error_trace.csv",
    "kappa_trace.csv",
    "benchmark.json",
];

/// Writes every benchmark output into `dir`.
pub fn write_benchmark(dir: &Path, doc: &BenchmarkDocument) -> Result<()> {
    let table = &doc.table;
    let json = serde_json::to_string_pretty(doc).map_err(|e| Error::InvalidResult(e.to_string()))? + "\n";
    let contents = [
        method_by_cell_csv(table, |c| c.mean_error),
        method_by_cell_csv(table, |c| c.median_error),
        method_by_cell_csv(table, |c| c.mean_ssr),
        trials_csv(table),
        failures_csv(table),
        error_trace_csv(table),
        kappa_trace_csv(table),
        json,
    ];
    for (name, text) in BENCHMARK_FILES.iter().zip(contents) {
        write_text(&dir.join(name), &text)?;
    }
    Ok(())
}
