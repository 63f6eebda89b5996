//! Header + binary grid files.
//!
//! A grid is a plain-text TOML header naming its axes (slowest first), fill
//! value and arrays, plus one raw file per array holding row-major
//! little-endian `f64` values. Array files sit next to the header and are
//! named `<stem>.<array>.f64`.
//!
//! ```toml
//! format = "vortex-grid"
//! version = 1
//! kind = "velocity"
//! fill_value = nan
//!
//! [[axes]]
//! name = "time"
//! units = "days"
//! coordinates = [0.0, 1.0, 2.0]
//!
//! [[axes]]
//! name = "lat"
//! units = "degrees_north"
//! start = -38.0
//! step = 0.125
//! len = 97
//!
//! [[arrays]]
//! name = "u"
//! file = "velocity.u.f64"
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vortex_core::cauchy_green::{Eigen, EigenField, SymTensor, SymmetricTensorField};
use vortex_core::flowmap::FlowMapGrid;
use vortex_core::velocity::{GriddedVelocityField, SshSeries};
use vortex_core::{Axis, GridSpec, Point};

pub const FORMAT_NAME: &str = "vortex-grid";
pub const FORMAT_VERSION: u32 = 1;

/// Explicit coordinates count as uniform when every gap matches the mean
/// step to this relative tolerance.
const UNIFORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed header: {message}")]
    Header { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Content { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisHeader {
    pub name: String,
    #[serde(default)]
    pub units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<f64>>,
}

impl AxisHeader {
    pub fn uniform(name: &str, units: &str, axis: Axis) -> Self {
        AxisHeader {
            name: name.into(),
            units: units.into(),
            start: Some(axis.start),
            step: Some(axis.step),
            len: Some(axis.len),
            coordinates: None,
        }
    }

    pub fn explicit(name: &str, units: &str, coords: Vec<f64>) -> Self {
        AxisHeader { name: name.into(), units: units.into(), start: None, step: None, len: None, coordinates: Some(coords) }
    }

    pub fn length(&self) -> usize {
        self.coordinates.as_ref().map_or(self.len.unwrap_or(0), Vec::len)
    }

    pub fn coords(&self) -> Vec<f64> {
        match (&self.coordinates, self.start, self.step, self.len) {
            (Some(c), ..) => c.clone(),
            (None, Some(s), Some(d), Some(n)) => (0..n).map(|k| Axis { start: s, step: d, len: n }.coord(k)).collect(),
            _ => Vec::new(),
        }
    }

    /// The axis as a uniform [`Axis`]; explicit coordinates must be evenly
    /// spaced.
    pub fn to_uniform(&self) -> Result<Axis, String> {
        match (&self.coordinates, self.start, self.step, self.len) {
            (None, Some(start), Some(step), Some(len)) => Ok(Axis { start, step, len }),
            (Some(c), None, None, None) => {
                if c.len() < 2 {
                    return Err(format!("axis '{}' needs at least two coordinates", self.name));
                }
                let step = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
                let uneven = c.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > UNIFORM_TOLERANCE * step.abs());
                if uneven || !(step > 0.0) {
                    return Err(format!("axis '{}' is not uniformly increasing", self.name));
                }
                Ok(Axis { start: c[0], step, len: c.len() })
            }
            _ => Err(format!("axis '{}' needs either start/step/len or coordinates", self.name)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayHeader {
    pub name: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridHeader {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub fill_value: f64,
    pub axes: Vec<AxisHeader>,
    pub arrays: Vec<ArrayHeader>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, f64>,
}

/// A header together with its array data, every array holding the product
/// of the axis lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub kind: String,
    pub axes: Vec<AxisHeader>,
    pub arrays: Vec<(String, Vec<f64>)>,
    pub attributes: BTreeMap<String, f64>,
}

impl GridFile {
    pub fn new(kind: &str, axes: Vec<AxisHeader>) -> Self {
        GridFile { kind: kind.into(), axes, arrays: Vec::new(), attributes: BTreeMap::new() }
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(AxisHeader::length).product()
    }

    pub fn array(&self, name: &str) -> Option<&[f64]> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, a)| a.as_slice())
    }

    fn require(&self, path: &Path, name: &str) -> Result<&[f64], FormatError> {
        self.array(name).ok_or_else(|| content(path, format!("missing array '{name}'")))
    }

    fn attribute(&self, path: &Path, name: &str) -> Result<f64, FormatError> {
        self.attributes.get(name).copied().ok_or_else(|| content(path, format!("missing attribute '{name}'")))
    }

    fn expect_kind(&self, path: &Path, kind: &str) -> Result<(), FormatError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(content(path, format!("expected a '{kind}' grid, found '{}'", self.kind)))
        }
    }
}

fn content(path: &Path, message: String) -> FormatError {
    FormatError::Content { path: path.to_path_buf(), message }
}

fn array_path(header: &Path, file: &str) -> PathBuf {
    header.parent().map_or_else(|| PathBuf::from(file), |d| d.join(file))
}

fn array_file_name(header: &Path, name: &str) -> String {
    let stem = header.file_stem().and_then(|s| s.to_str()).unwrap_or("grid");
    format!("{stem}.{name}.f64")
}

/// Write `grid` to `header` and its sibling array files. Non-finite values
/// are stored as NaN, the fill value.
pub fn write_grid(header: &Path, grid: &GridFile) -> Result<(), FormatError> {
    if let Some(dir) = header.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let n = grid.size();
    let mut arrays = Vec::with_capacity(grid.arrays.len());
    for (name, data) in &grid.arrays {
        if data.len() != n {
            return Err(content(header, format!("array '{name}' has {} values, axes need {n}", data.len())));
        }
        let file = array_file_name(header, name);
        let path = array_path(header, &file);
        let f = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(f);
        for v in data {
            let v = if v.is_finite() { *v } else { f64::NAN };
            w.write_all(&v.to_le_bytes()).map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        arrays.push(ArrayHeader { name: name.clone(), file });
    }
    let h = GridHeader {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        kind: grid.kind.clone(),
        fill_value: f64::NAN,
        axes: grid.axes.clone(),
        arrays,
        attributes: grid.attributes.clone(),
    };
    let text = toml::to_string(&h).map_err(|e| FormatError::Header { path: header.to_path_buf(), message: e.to_string() })?;
    fs::write(header, text).map_err(io_err(header))
}

/// Read a header and all its arrays. Values equal to the fill value come
/// back as NaN.
pub fn read_grid(header: &Path) -> Result<GridFile, FormatError> {
    let text = fs::read_to_string(header).map_err(io_err(header))?;
    let h: GridHeader =
        toml::from_str(&text).map_err(|e| FormatError::Header { path: header.to_path_buf(), message: e.to_string() })?;
    if h.format != FORMAT_NAME || h.version != FORMAT_VERSION {
        return Err(FormatError::Header {
            path: header.to_path_buf(),
            message: format!("unsupported format {} version {}", h.format, h.version),
        });
    }
    let n: usize = h.axes.iter().map(AxisHeader::length).product();
    let mut arrays = Vec::with_capacity(h.arrays.len());
    for a in &h.arrays {
        let path = array_path(header, &a.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if bytes.len() != 8 * n {
            return Err(content(&path, format!("expected {} bytes, found {}", 8 * n, bytes.len())));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| {
                let v = f64::from_le_bytes(c.try_into().expect("chunks of eight"));
                if v == h.fill_value { f64::NAN } else { v }
            })
            .collect();
        arrays.push((a.name.clone(), data));
    }
    Ok(GridFile { kind: h.kind, axes: h.axes, arrays, attributes: h.attributes })
}

fn spatial_axes(grid: GridSpec, x_name: &str, y_name: &str, units: &str) -> Vec<AxisHeader> {
    vec![AxisHeader::uniform(y_name, units, grid.y), AxisHeader::uniform(x_name, units, grid.x)]
}

fn read_spatial(path: &Path, g: &GridFile, offset: usize) -> Result<GridSpec, FormatError> {
    if g.axes.len() != offset + 2 {
        return Err(content(path, format!("expected {} axes, found {}", offset + 2, g.axes.len())));
    }
    let y = g.axes[offset].to_uniform().map_err(|m| content(path, m))?;
    let x = g.axes[offset + 1].to_uniform().map_err(|m| content(path, m))?;
    Ok(GridSpec::new(x, y))
}

pub fn velocity_to_grid(v: &GriddedVelocityField) -> GridFile {
    let mut g = GridFile::new(
        "velocity",
        vec![
            AxisHeader::explicit("time", "days", v.time_axis().to_vec()),
            AxisHeader::uniform("lat", "degrees_north", *v.y_axis()),
            AxisHeader::uniform("lon", "degrees_east", *v.x_axis()),
        ],
    );
    g.arrays.push(("u".into(), v.u().to_vec()));
    g.arrays.push(("v".into(), v.v().to_vec()));
    g
}

/// Velocity grid: axes `time, y, x`, arrays `u` and `v`.
pub fn read_velocity(path: &Path) -> Result<GriddedVelocityField, FormatError> {
    let g = read_grid(path)?;
    g.expect_kind(path, "velocity")?;
    let spec = read_spatial(path, &g, 1)?;
    let time = g.axes[0].coords();
    GriddedVelocityField::new(spec.x, spec.y, time, g.require(path, "u")?.to_vec(), g.require(path, "v")?.to_vec())
        .map_err(|e| content(path, e.to_string()))
}

pub fn ssh_to_grid(s: &SshSeries) -> GridFile {
    let mut g = GridFile::new(
        "ssh",
        vec![
            AxisHeader::explicit("time", "days", s.time.clone()),
            AxisHeader::uniform("lat", "degrees_north", s.lat),
            AxisHeader::uniform("lon", "degrees_east", s.lon),
        ],
    );
    g.arrays.push(("h".into(), s.h.clone()));
    g
}

/// Sea-surface height grid: axes `time, lat, lon`, array `h` in metres.
pub fn read_ssh(path: &Path) -> Result<SshSeries, FormatError> {
    let g = read_grid(path)?;
    g.expect_kind(path, "ssh")?;
    let spec = read_spatial(path, &g, 1)?;
    Ok(SshSeries { lon: spec.x, lat: spec.y, time: g.axes[0].coords(), h: g.require(path, "h")?.to_vec() })
}

const STENCIL_ARRAYS: [&str; 8] = ["xp_x", "xp_y", "xm_x", "xm_y", "yp_x", "yp_y", "ym_x", "ym_y"];

pub fn flowmap_to_grid(fm: &FlowMapGrid) -> GridFile {
    let mut g = GridFile::new("flowmap", spatial_axes(fm.grid, "x", "y", ""));
    for (k, name) in STENCIL_ARRAYS.iter().enumerate() {
        let data = fm
            .stencil
            .iter()
            .zip(&fm.valid)
            .map(|(s, v)| {
                let p = s[k / 2];
                match (*v, k % 2) {
                    (false, _) => f64::NAN,
                    (true, 0) => p.x,
                    (true, _) => p.y,
                }
            })
            .collect();
        g.arrays.push(((*name).into(), data));
    }
    g.attributes.insert("rho".into(), fm.rho);
    g.attributes.insert("t0".into(), fm.t0);
    g.attributes.insert("horizon".into(), fm.horizon);
    g
}

/// Flow-map checkpoint; a node is valid iff all eight stencil values are
/// finite.
pub fn read_flowmap(path: &Path) -> Result<FlowMapGrid, FormatError> {
    let g = read_grid(path)?;
    g.expect_kind(path, "flowmap")?;
    let grid = read_spatial(path, &g, 0)?;
    let cols: Vec<&[f64]> = STENCIL_ARRAYS.iter().map(|n| g.require(path, n)).collect::<Result<_, _>>()?;
    let mut stencil = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    #[allow(clippy::needless_range_loop)]
    for k in 0..grid.len() {
        let s: [Point; 4] = std::array::from_fn(|m| Point::new(cols[2 * m][k], cols[2 * m + 1][k]));
        valid.push(s.iter().all(|p| p.is_finite()));
        stencil.push(s);
    }
    FlowMapGrid::from_parts(
        grid,
        g.attribute(path, "rho")?,
        g.attribute(path, "t0")?,
        g.attribute(path, "horizon")?,
        stencil,
        valid,
    )
    .map_err(|e| content(path, e.to_string()))
}

pub fn tensor_to_grid(tf: &SymmetricTensorField) -> GridFile {
    let mut g = GridFile::new("tensor", spatial_axes(tf.grid, "x", "y", ""));
    let col = |f: fn(&SymTensor) -> f64| tf.tensors.iter().zip(&tf.valid).map(|(t, v)| if *v { f(t) } else { f64::NAN }).collect();
    g.arrays.push(("c11".into(), col(|t| t.c11)));
    g.arrays.push(("c12".into(), col(|t| t.c12)));
    g.arrays.push(("c22".into(), col(|t| t.c22)));
    g
}

/// Tensor checkpoint; nodes with any non-finite component are masked.
pub fn read_tensor(path: &Path) -> Result<SymmetricTensorField, FormatError> {
    let g = read_grid(path)?;
    g.expect_kind(path, "tensor")?;
    let grid = read_spatial(path, &g, 0)?;
    let (a, b, c) = (g.require(path, "c11")?, g.require(path, "c12")?, g.require(path, "c22")?);
    let tensors: Vec<SymTensor> = (0..grid.len()).map(|k| SymTensor::new(a[k], b[k], c[k])).collect();
    let valid = tensors.iter().map(SymTensor::is_finite).collect();
    Ok(SymmetricTensorField::new(grid, tensors, valid))
}

const EIGEN_ARRAYS: [&str; 7] = ["lambda1", "lambda2", "xi1_x", "xi1_y", "xi2_x", "xi2_y", "degenerate"];

pub fn eigen_to_grid(ef: &EigenField) -> GridFile {
    let mut g = GridFile::new("eigen", spatial_axes(ef.grid, "x", "y", ""));
    let fields: [fn(&Eigen) -> f64; 7] = [
        |e| e.lambda1,
        |e| e.lambda2,
        |e| e.xi1.x,
        |e| e.xi1.y,
        |e| e.xi2.x,
        |e| e.xi2.y,
        |e| if e.degenerate { 1.0 } else { 0.0 },
    ];
    for (name, f) in EIGEN_ARRAYS.iter().zip(fields) {
        let data = ef.eigen.iter().zip(&ef.valid).map(|(e, v)| if *v { f(e) } else { f64::NAN }).collect();
        g.arrays.push(((*name).into(), data));
    }
    g
}

/// Eigen checkpoint, read back exactly as stored (eigenvalues are not
/// recomputed, so a resumed run sees bit-identical fields).
pub fn read_eigen(path: &Path) -> Result<EigenField, FormatError> {
    let g = read_grid(path)?;
    g.expect_kind(path, "eigen")?;
    let grid = read_spatial(path, &g, 0)?;
    let cols: Vec<&[f64]> = EIGEN_ARRAYS.iter().map(|n| g.require(path, n)).collect::<Result<_, _>>()?;
    let mut eigen = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let ok = cols.iter().all(|c| c[k].is_finite());
        valid.push(ok);
        eigen.push(Eigen {
            lambda1: cols[0][k],
            lambda2: cols[1][k],
            xi1: Point::new(cols[2][k], cols[3][k]),
            xi2: Point::new(cols[4][k], cols[5][k]),
            degenerate: !ok || cols[6][k] != 0.0,
        });
    }
    Ok(EigenField { grid, eigen, valid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vortex_core::cauchy_green::build_tensor_field;
    use vortex_core::flowmap::{compute_flow_map_grid, IntegratorConfig};
    use vortex_core::geometry::{Bounds, Mat2};
    use vortex_core::velocity::Linear;

    #[test]
    fn arrays_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.toml");
        let mut g = GridFile::new(
            "test",
            vec![AxisHeader::explicit("t", "days", vec![0.0, 0.5]), AxisHeader::uniform("x", "m", Axis::spanning(0.0, 1.0, 3))],
        );
        g.arrays.push(("a".into(), vec![0.1, -2.5e-300, f64::NAN, 1.0 / 3.0, f64::MAX, -0.0]));
        g.attributes.insert("rho".into(), 0.1);
        write_grid(&path, &g).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(back.kind, "test");
        assert_eq!(back.axes, g.axes);
        assert_eq!(back.attributes, g.attributes);
        let (a, b) = (g.array("a").unwrap(), back.array("a").unwrap());
        for (x, y) in a.iter().zip(b) {
            assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
        }
        assert_eq!(fs::metadata(dir.path().join("g.a.f64")).unwrap().len(), 48);
    }

    #[test]
    fn truncated_array_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.toml");
        let mut g = GridFile::new("test", vec![AxisHeader::uniform("x", "", Axis::spanning(0.0, 1.0, 4))]);
        g.arrays.push(("a".into(), vec![1.0; 4]));
        write_grid(&path, &g).unwrap();
        fs::write(dir.path().join("g.a.f64"), [0u8; 24]).unwrap();
        assert!(matches!(read_grid(&path), Err(FormatError::Content { .. })));
    }

    #[test]
    fn explicit_axes_must_be_uniform_for_space() {
        let ok = AxisHeader::explicit("x", "", vec![1.0, 1.5, 2.0]).to_uniform().unwrap();
        assert_eq!((ok.start, ok.step, ok.len), (1.0, 0.5, 3));
        assert!(AxisHeader::explicit("x", "", vec![1.0, 1.5, 2.5]).to_uniform().is_err());
        assert!(AxisHeader::explicit("x", "", vec![2.0, 1.0]).to_uniform().is_err());
    }

    #[test]
    fn checkpoints_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let field = Linear(Mat2::new(0.1, 0.4, -0.2, -0.1));
        let grid = GridSpec::covering(Bounds::new(-1.0, 1.0, -1.0, 1.0), 7, 5);
        let fm = compute_flow_map_grid(&field, grid, 0.1, &IntegratorConfig::rk45(0.0, 1.0, 1e-8)).unwrap();
        let p = dir.path().join("flowmap.toml");
        write_grid(&p, &flowmap_to_grid(&fm)).unwrap();
        assert_eq!(read_flowmap(&p).unwrap(), fm);

        let (tf, ef) = build_tensor_field(&fm);
        let (pt, pe) = (dir.path().join("tensor.toml"), dir.path().join("eigen.toml"));
        write_grid(&pt, &tensor_to_grid(&tf)).unwrap();
        write_grid(&pe, &eigen_to_grid(&ef)).unwrap();
        assert_eq!(read_tensor(&pt).unwrap(), tf);
        assert_eq!(read_eigen(&pe).unwrap(), ef);
    }

    #[test]
    fn velocity_round_trip_and_kind_check() {
        let dir = tempfile::tempdir().unwrap();
        let v = GriddedVelocityField::new(
            Axis::spanning(0.0, 1.0, 3),
            Axis::spanning(-1.0, 0.0, 2),
            vec![0.0, 2.0],
            (0..12).map(|k| k as f64).collect(),
            (0..12).map(|k| -(k as f64)).collect(),
        )
        .unwrap();
        let p = dir.path().join("v.toml");
        write_grid(&p, &velocity_to_grid(&v)).unwrap();
        assert_eq!(read_velocity(&p).unwrap(), v);
        assert!(read_ssh(&p).is_err());
    }
}
