//! CSV and JSON writers. Every writer is deterministic for identical input.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use cloak::shellnorm::{ShellTrace, ThreeSphereReport};
use cloak::solver::FieldExpansion;
use cloak::geomap::Point;
use serde::Serialize;

use crate::sweep::{SweepRecord, SweepResult};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
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

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), BenchError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `rows` to `<dir>/<stem>.csv` or `<dir>/<stem>.json`.
pub fn write_table<T: Serialize>(dir: &Path, stem: &str, rows: &[T], format: Format) -> Result<(), BenchError> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        Format::Csv => write_csv(&path, rows),
        Format::Json => write_json(&path, rows),
    }
}

#[derive(Serialize)]
struct SweepRow {
    delta: f64,
    misfit: f64,
    interior_norm: f64,
    jump_2r2: f64,
    data_functional: f64,
    stability_ratio: f64,
}

impl From<&SweepRecord> for SweepRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            delta: r.delta,
            misfit: r.misfit,
            interior_norm: r.interior_norm,
            jump_2r2: r.jump_2r2,
            data_functional: r.data_functional,
            stability_ratio: r.stability_ratio,
        }
    }
}

/// `sweep.csv` (or `sweep.json` with every diagnostic) and `fit.json`.
pub fn write_sweep(dir: &Path, result: &SweepResult, format: Format) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    match format {
        Format::Csv => {
            let rows: Vec<SweepRow> = result.records.iter().map(SweepRow::from).collect();
            write_csv(&dir.join("sweep.csv"), &rows)?;
        }
        Format::Json => write_json(&dir.join("sweep.json"), &result.records)?,
    }
    write_json(&dir.join("fit.json"), &result.fit)
}

#[derive(Serialize)]
struct InequalityRow {
    #[serde(rename = "R1")]
    r1: f64,
    #[serde(rename = "R2")]
    r2: f64,
    #[serde(rename = "R3")]
    r3: f64,
    alpha: f64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
}

/// `(R1, R2, R3, alpha, lhs, rhs, ratio)` rows.
pub fn write_inequality(dir: &Path, stem: &str, reports: &[ThreeSphereReport], format: Format) -> Result<(), BenchError> {
    let rows: Vec<InequalityRow> = reports
        .iter()
        .map(|r| InequalityRow {
            r1: r.radii[0],
            r2: r.radii[1],
            r3: r.radii[2],
            alpha: r.alpha,
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
        })
        .collect();
    write_table(dir, stem, &rows, format)
}

#[derive(Serialize)]
struct TraceRow {
    n: usize,
    m: i32,
    #[serde(rename = "|c|")]
    c: f64,
    #[serde(rename = "|d|")]
    d: f64,
}

/// `(n, m, |c|, |d|)` rows.
pub fn write_trace(dir: &Path, stem: &str, trace: &ShellTrace, format: Format) -> Result<(), BenchError> {
    let rows: Vec<TraceRow> = trace.rows().into_iter().map(|(n, m, c, d)| TraceRow { n, m, c, d }).collect();
    write_table(dir, stem, &rows, format)
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct FieldRow {
    x: f64,
    y: f64,
    z: f64,
    ReEx: f64,
    ImEx: f64,
    ReEy: f64,
    ImEy: f64,
    ReEz: f64,
    ImEz: f64,
    ReHx: f64,
    ImHx: f64,
    ReHy: f64,
    ImHy: f64,
    ReHz: f64,
    ImHz: f64,
}

/// Field samples `(x, y, z, ReEx, ImEx, …, ReHz, ImHz)`.
pub fn write_field_samples(dir: &Path, stem: &str, field: &FieldExpansion, points: &[Point], format: Format) -> Result<(), BenchError> {
    let values = field
        .evaluate(points)
        .map_err(|source| BenchError::Solver { delta: f64::NAN, source })?;
    let rows: Vec<FieldRow> = points
        .iter()
        .zip(values)
        .map(|(p, (e, h))| FieldRow {
            x: p[0],
            y: p[1],
            z: p[2],
            ReEx: e[0].re,
            ImEx: e[0].im,
            ReEy: e[1].re,
            ImEy: e[1].im,
            ReEz: e[2].re,
            ImEz: e[2].im,
            ReHx: h[0].re,
            ImHx: h[0].im,
            ReHy: h[1].re,
            ImHy: h[1].im,
            ReHz: h[2].re,
            ImHz: h[2].im,
        })
        .collect();
    write_table(dir, stem, &rows, format)
}
