//! Run directory layout: `meta.json`, `series.csv`, `snapshots/`, and the
//! per-command JSON and CSV outputs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use muskat_core::evolution::{MonitorRow, Snapshot};
use muskat_core::linear_analysis::DispersionRow;
use serde::Serialize;

pub const SERIES_HEADER: [&str; 10] =
    ["t", "dt", "gap", "dist", "hnorm_f", "hnorm_h", "mean_f", "mean_h", "himode_frac", "surface_area"];

/// Values of one snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join("snapshots").join(format!("snap_{step:06}.csv"))
}

pub fn field_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("field_{step:06}.csv"))
}

/// Step number encoded in a `snap_<step>.csv` name.
pub fn snapshot_step(path: &Path) -> Option<usize> {
    path.file_stem()?.to_str()?.strip_prefix("snap_")?.parse().ok()
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e)
}

/// Shortest round-trip text, in exponent form far from unit scale.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| format_value(v))).map_err(csv_err)?;
    }
    w.flush()
}

/// Every `stride`-th row plus the last one.
pub fn write_series(path: &Path, rows: &[MonitorRow], stride: usize) -> io::Result<()> {
    let stride = stride.max(1);
    let last = rows.len().saturating_sub(1);
    let picked = rows.iter().enumerate().filter(|(i, _)| i % stride == 0 || *i == last).map(|(_, r)| {
        vec![r.t, r.dt, r.gap, r.dist, r.hnorm_f, r.hnorm_h, r.mean_f, r.mean_h, r.himode_frac, r.surface_area]
    });
    write_rows(path, &SERIES_HEADER, picked)
}

pub fn read_series(path: &Path) -> io::Result<Vec<MonitorRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != SERIES_HEADER {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let v = parse_record(&rec.map_err(csv_err)?, 10)?;
        out.push(MonitorRow {
            t: v[0],
            dt: v[1],
            gap: v[2],
            dist: v[3],
            hnorm_f: v[4],
            hnorm_h: v[5],
            mean_f: v[6],
            mean_h: v[7],
            himode_frac: v[8],
            surface_area: v[9],
        });
    }
    Ok(out)
}

fn parse_record(rec: &csv::StringRecord, n: usize) -> io::Result<Vec<f64>> {
    if rec.len() != n {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("expected {n} columns, got {}", rec.len())));
    }
    rec.iter()
        .map(|s| s.trim().parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{s:?}: {e}"))))
        .collect()
}

pub fn write_snapshot(dir: &Path, snap: &Snapshot) -> io::Result<PathBuf> {
    let path = snapshot_path(dir, snap.step);
    fs::create_dir_all(path.parent().expect("snapshot path has a parent"))?;
    let xs = snap.f.grid().nodes();
    let rows = (0..xs.len()).map(|i| vec![xs[i], snap.f.values()[i], snap.h.values()[i]]);
    write_rows(&path, &["x", "f", "h"], rows)?;
    Ok(path)
}

pub fn read_snapshot(path: &Path) -> io::Result<SnapshotData> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != ["x", "f", "h"] {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("expected header x,f,h, got {header:?}")));
    }
    let mut out = SnapshotData { x: Vec::new(), f: Vec::new(), h: Vec::new() };
    for rec in r.records() {
        let v = parse_record(&rec.map_err(csv_err)?, 3)?;
        out.x.push(v[0]);
        out.f.push(v[1]);
        out.h.push(v[2]);
    }
    Ok(out)
}

/// All snapshot files of a run, ordered by step.
pub fn list_snapshots(dir: &Path) -> io::Result<Vec<(usize, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir.join("snapshots"))? {
        let path = entry?.path();
        if let Some(step) = snapshot_step(&path) {
            out.push((step, path));
        }
    }
    out.sort();
    Ok(out)
}

/// One row of `field_<step>.csv`; velocity and pressure are NaN within the
/// exclusion zone of an interface.
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub v1: f64,
    pub v2: f64,
    pub p: f64,
}

pub fn write_field(path: &Path, rows: &[FieldRow]) -> io::Result<()> {
    write_rows(path, &["x", "y", "v1", "v2", "p"], rows.iter().map(|r| vec![r.x, r.y, r.v1, r.v2, r.p]))
}

pub fn write_dispersion(path: &Path, rows: &[DispersionRow]) -> io::Result<()> {
    let header = [
        "k",
        "xi",
        "predicted_minus",
        "predicted_plus",
        "measured_minus",
        "measured_plus",
        "rel_err_minus",
        "rel_err_plus",
    ];
    write_rows(
        path,
        &header,
        rows.iter().map(|r| {
            let e = r.relative_errors();
            vec![r.k as f64, r.xi, r.predicted[0], r.predicted[1], r.measured[0], r.measured[1], e[0], e[1]]
        }),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    text.push('\n');
    fs::write(path, text)
}
