//! CSV tables: small velocity grids in long form, and the singularity,
//! pair, section and boundary-vertex tables exchanged between stages.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vortex_core::lambda_lines::PoincareSection;
use vortex_core::velocity::GriddedVelocityField;
use vortex_core::{Axis, Point, Singularity, SingularityType, WedgePair};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Content { path: PathBuf, message: String },
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> TableError + '_ {
    move |source| TableError::Csv { path: path.to_path_buf(), source }
}

fn content(path: &Path, message: impl Into<String>) -> TableError {
    TableError::Content { path: path.to_path_buf(), message: message.into() }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, TableError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| TableError::Io { path: dir.to_path_buf(), source })?;
    }
    csv::Writer::from_path(path).map_err(csv_err(path))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, TableError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct VelocityRow {
    t: f64,
    x: f64,
    y: f64,
    u: f64,
    v: f64,
}

/// Sorted distinct values, merged when closer than `1e-9` of the range.
fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let span = v.last().zip(v.first()).map_or(0.0, |(a, b)| a - b);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * span);
    v
}

fn uniform_axis(path: &Path, name: &str, c: &[f64]) -> Result<Axis, TableError> {
    if c.len() < 2 {
        return Err(content(path, format!("column '{name}' needs at least two distinct values")));
    }
    let axis = Axis::spanning(c[0], c[c.len() - 1], c.len());
    if c.iter().enumerate().any(|(k, x)| (x - axis.coord(k)).abs() > 1e-9 * axis.step) {
        return Err(content(path, format!("column '{name}' is not evenly spaced")));
    }
    Ok(axis)
}

/// Velocity grid from a CSV with columns `t,x,y,u,v`, one row per node and
/// time; every combination must be present exactly once.
pub fn read_velocity_csv(path: &Path) -> Result<GriddedVelocityField, TableError> {
    let rows: Vec<VelocityRow> = read_rows(path)?;
    let ts = distinct(rows.iter().map(|r| r.t));
    let x = uniform_axis(path, "x", &distinct(rows.iter().map(|r| r.x)))?;
    let y = uniform_axis(path, "y", &distinct(rows.iter().map(|r| r.y)))?;
    let n = ts.len() * x.len * y.len;
    if rows.len() != n {
        return Err(content(path, format!("expected {n} rows for a full grid, found {}", rows.len())));
    }
    let mut u = vec![f64::NAN; n];
    let mut v = vec![f64::NAN; n];
    let mut seen = BTreeSet::new();
    for r in &rows {
        let k = ts.iter().position(|t| (t - r.t).abs() <= 1e-9 * (1.0 + t.abs())).expect("time from the same rows");
        let i = libm_round(x.frac_index(r.x));
        let j = libm_round(y.frac_index(r.y));
        let idx = (k * y.len + j) * x.len + i;
        if !seen.insert(idx) {
            return Err(content(path, format!("duplicate row at t={}, x={}, y={}", r.t, r.x, r.y)));
        }
        u[idx] = r.u;
        v[idx] = r.v;
    }
    GriddedVelocityField::new(x, y, ts, u, v).map_err(|e| content(path, e.to_string()))
}

fn libm_round(f: f64) -> usize {
    f.round().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityRow {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "type")]
    pub kind: String,
    pub nn_distance: f64,
    pub cell_i: usize,
    pub cell_j: usize,
}

pub fn write_singularities(path: &Path, sings: &[Singularity]) -> Result<(), TableError> {
    let mut w = writer(path)?;
    for (k, s) in sings.iter().enumerate() {
        w.serialize((k, s.position.x, s.position.y, s.kind.as_str(), s.nearest_neighbor_distance, s.cell.0, s.cell.1))
            .map_err(csv_err(path))?;
    }
    drop(w);
    prepend_header(path, "index,x,y,type,nn_distance,cell_i,cell_j")
}

pub fn read_singularities(path: &Path) -> Result<Vec<Singularity>, TableError> {
    let rows: Vec<(usize, f64, f64, String, f64, usize, usize)> = read_rows(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(k, (index, x, y, kind, nn, ci, cj))| {
            if index != k {
                return Err(content(path, format!("row {k} has index {index}")));
            }
            let kind = SingularityType::parse(&kind).ok_or_else(|| content(path, format!("unknown type '{kind}'")))?;
            Ok(Singularity { position: Point::new(x, y), kind, nearest_neighbor_distance: nn, cell: (ci, cj) })
        })
        .collect()
}

/// Serialize tuples without a header line, then put the header in front;
/// keeps column names stable regardless of tuple field names.
fn prepend_header(path: &Path, header: &str) -> Result<(), TableError> {
    let io = |source| TableError::Io { path: path.to_path_buf(), source };
    let body = fs::read_to_string(path).map_err(io)?;
    fs::write(path, format!("{header}\n{body}")).map_err(io)
}

pub fn write_pairs(path: &Path, pairs: &[WedgePair], sings: &[Singularity]) -> Result<(), TableError> {
    let mut w = writer(path)?;
    for (k, p) in pairs.iter().enumerate() {
        let (a, b) = (sings[p.first].position, sings[p.second].position);
        w.serialize((k, p.first, p.second, a.x, a.y, b.x, b.y, p.midpoint.x, p.midpoint.y, p.separation)).map_err(csv_err(path))?;
    }
    drop(w);
    prepend_header(path, "pair,first,second,x1,y1,x2,y2,mid_x,mid_y,separation")
}

/// Pairs referring to rows of the matching singularity table.
pub fn read_pairs(path: &Path, sings: &[Singularity]) -> Result<Vec<WedgePair>, TableError> {
    type Row = (usize, usize, usize, f64, f64, f64, f64, f64, f64, f64);
    let rows: Vec<Row> = read_rows(path)?;
    rows.into_iter()
        .map(|(_, first, second, _, _, _, _, mx, my, sep)| {
            if first >= sings.len() || second >= sings.len() {
                return Err(content(path, format!("pair ({first}, {second}) refers past the singularity table")));
            }
            Ok(WedgePair { first, second, midpoint: Point::new(mx, my), separation: sep })
        })
        .collect()
}

pub fn write_sections(path: &Path, sections: &[(usize, PoincareSection)]) -> Result<(), TableError> {
    let mut w = writer(path)?;
    for (pair, s) in sections {
        w.serialize((pair, s.anchor.x, s.anchor.y, s.endpoint.x, s.endpoint.y, s.seeds.len(), s.truncated)).map_err(csv_err(path))?;
    }
    drop(w);
    prepend_header(path, "pair,anchor_x,anchor_y,end_x,end_y,seeds,truncated")
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SectionRow {
    pub pair: usize,
    pub anchor_x: f64,
    pub anchor_y: f64,
    pub end_x: f64,
    pub end_y: f64,
    pub seeds: usize,
    pub truncated: bool,
}

pub fn read_sections(path: &Path) -> Result<Vec<SectionRow>, TableError> {
    read_rows(path)
}

/// One row per polygon vertex, `eddy` numbering boundaries in output order.
pub fn write_boundary_vertices<'a>(path: &Path, polys: impl IntoIterator<Item = &'a [Point]>) -> Result<(), TableError> {
    let mut w = writer(path)?;
    for (e, vs) in polys.into_iter().enumerate() {
        for (k, p) in vs.iter().enumerate() {
            w.serialize((e, k, p.x, p.y)).map_err(csv_err(path))?;
        }
    }
    drop(w);
    prepend_header(path, "eddy,vertex,x,y")
}
