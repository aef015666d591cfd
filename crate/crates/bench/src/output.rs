//! CSV / JSON emission of result tables, scatter points and traces.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::runner::{Report, ResultRow};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma-separated table with a header row.
    #[default]
    Csv,
    /// JSON array of records.
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// `results.csv` → `results.scatter.csv`.
pub fn sibling(path: &Path, tag: &str, format: Format) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.{tag}.{}", format.extension()))
}

pub fn write_records<S: Serialize>(records: &[S], path: &Path, format: Format) -> Result<()> {
    let io_err = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(file);
            for r in records {
                w.serialize(r).map_err(|source| BenchError::Csv {
                    path: path.to_path_buf(),
                    source,
                })?;
            }
            w.flush().map_err(io_err)?;
        }
        Format::Json => {
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, records).map_err(|source| BenchError::Json {
                path: path.to_path_buf(),
                source,
            })?;
            writeln!(w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

/// Writes the result table to `path`, the scatter points next to it and,
/// when present, the iteration trace. Returns every path written.
pub fn emit_results(report: &Report, path: &Path, format: Format) -> Result<Vec<PathBuf>> {
    if report.rows.is_empty() {
        return Err(BenchError::Scenario("nothing to write: no result rows".into()));
    }
    let mut written = vec![path.to_path_buf()];
    write_records(&report.rows, path, format)?;
    let scatter = sibling(path, "scatter", format);
    write_records(&report.scatter, &scatter, format)?;
    written.push(scatter);
    if !report.trace.is_empty() {
        let trace = sibling(path, "trace", format);
        write_records(&report.trace, &trace, format)?;
        written.push(trace);
    }
    Ok(written)
}

/// Fixed-width console table, rounded for reading.
pub fn summary(rows: &[ResultRow]) -> String {
    let mut s = format!(
        "{:<11} {:>5} {:>7} {:>3} {:>6} {:>10} {:>10} {:>8} {:>10}\n",
        "method", "r_k", "snr_db", "P", "trials", "rmse_v", "rmse_r", "iters", "wall_ms"
    );
    let f = |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"));
    for r in rows {
        s += &format!(
            "{:<11} {:>5} {:>7} {:>3} {:>6} {:>10} {:>10} {:>8} {:>10}",
            r.method.name(),
            r.r_k,
            r.snr_db,
            r.p,
            r.trials,
            f(r.rmse_velocity_mps, 3),
            f(r.rmse_range_m, 3),
            f(r.mean_iterations, 1),
            f(r.mean_wall_ms, 2),
        );
        if let Some(e) = &r.error {
            s += &format!("  error: {e}");
        }
        s.push('\n');
    }
    s
}
