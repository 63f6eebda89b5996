//! Pipeline configuration: one TOML file per scenario, with dotted
//! `section.key=value` overrides from the command line.
//!
//! ```toml
//! [input]
//! kind = "double_gyre"          # double_gyre | synthetic_ocean | gridded | ssh | rest
//! amplitude = 0.2
//! epsilon = 0.2
//! omega = 0.6283185307179586
//!
//! [flowmap]
//! t0 = 0.0
//! horizon = 7.853981633974483
//! domain = [0.00125, 0.99875, 0.00125, 0.99875]   # x_min, x_max, y_min, y_max
//! nx = 400
//! ny = 400
//! rho = 0.001                    # stencil half-width, fraction of Δx
//! method = "rk45"                # rk45 | rk4
//! tolerance = 1e-6               # rk45 absolute and relative tolerance
//! rk4_steps = 1000
//!
//! [topology]
//! max_pair_distance = 0.3
//!
//! [section]
//! length = 0.45
//! seeds = 100
//!
//! [sweep]
//! lambda_min = 0.85
//! lambda_max = 1.15
//! lambda_step = 0.01
//! signs = "both"                 # both | plus | minus
//! line_step = 0.5                # λ-line step, in grid spacings
//! max_arclength = 20.0           # in section lengths
//!
//! [output]
//! dir = "out/double_gyre"
//! threads = 0                    # 0 = all cores
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vortex_core::flowmap::IntegratorConfig;
use vortex_core::geometry::Bounds;
use vortex_core::lambda_lines::{Branch, LineIntegration, SweepConfig};
use vortex_core::GridSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override '{0}': expected key.path=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    DoubleGyre {
        amplitude: f64,
        epsilon: f64,
        omega: f64,
    },
    /// Bundled three-eddy scenario on its own grid.
    SyntheticOcean {
        #[serde(default)]
        background_amplitude: Option<f64>,
    },
    /// Velocity grid file (header or CSV).
    Gridded {
        path: PathBuf,
    },
    /// Sea-surface height grid; velocities are geostrophic.
    Ssh {
        path: PathBuf,
        #[serde(default)]
        coriolis_floor: Option<f64>,
    },
    /// Fluid at rest everywhere.
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk45,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowmapConfig {
    #[serde(default)]
    pub t0: f64,
    pub horizon: f64,
    pub domain: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_method")]
    pub method: MethodName,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_rk4_steps")]
    pub rk4_steps: usize,
}

fn default_rho() -> f64 {
    0.1
}
fn default_method() -> MethodName {
    MethodName::Rk45
}
fn default_tolerance() -> f64 {
    1e-6
}
fn default_rk4_steps() -> usize {
    1000
}

impl FlowmapConfig {
    pub fn grid(&self) -> GridSpec {
        let [x0, x1, y0, y1] = self.domain;
        GridSpec::covering(Bounds::new(x0, x1, y0, y1), self.nx, self.ny)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        match self.method {
            MethodName::Rk45 => IntegratorConfig::rk45(self.t0, self.horizon, self.tolerance),
            MethodName::Rk4 => IntegratorConfig::rk4_steps(self.t0, self.horizon, self.rk4_steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    /// Wedges farther than this from every other wedge are not paired.
    pub max_pair_distance: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig { max_pair_distance: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectionConfig {
    pub length: f64,
    pub seeds: usize,
}

impl Default for SectionConfig {
    fn default() -> Self {
        SectionConfig { length: 1.5, seeds: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signs {
    Both,
    Plus,
    Minus,
}

impl Signs {
    pub fn branches(self) -> Vec<Branch> {
        match self {
            Signs::Both => Branch::BOTH.to_vec(),
            Signs::Plus => vec![Branch::Plus],
            Signs::Minus => vec![Branch::Minus],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub signs: Signs,
    /// λ-line step in grid spacings.
    pub line_step: f64,
    /// Arclength cap in section lengths.
    pub max_arclength: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { lambda_min: 0.85, lambda_max: 1.15, lambda_step: 0.01, signs: Signs::Both, line_step: 0.5, max_arclength: 20.0 }
    }
}

impl SweepSettings {
    pub fn to_sweep(&self, grid_spacing: f64, section_length: f64) -> SweepConfig {
        SweepConfig {
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            lambda_step: self.lambda_step,
            branches: self.signs.branches(),
            integration: LineIntegration { step: self.line_step * grid_spacing, max_arclength: self.max_arclength * section_length },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), threads: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub flowmap: FlowmapConfig,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub section: SectionConfig,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

impl PipelineConfig {
    /// Parse TOML text, apply overrides, validate. Relative paths are
    /// resolved against `base`.
    pub fn from_toml(text: &str, overrides: &[String], base: &Path) -> Result<Self, ConfigError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: PipelineConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, overrides, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.input {
            InputConfig::Gridded { path } | InputConfig::Ssh { path, .. } => fix(path),
            _ => {}
        }
        fix(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        match &self.input {
            InputConfig::DoubleGyre { amplitude, epsilon, omega } => {
                if !(*amplitude > 0.0) || !(0.0..0.5).contains(epsilon) || !(*omega > 0.0) {
                    return bad("double gyre needs amplitude > 0, 0 <= epsilon < 0.5, omega > 0".into());
                }
            }
            InputConfig::Gridded { path } | InputConfig::Ssh { path, .. } => {
                if !path.exists() {
                    return bad(format!("input file {} does not exist", path.display()));
                }
            }
            InputConfig::SyntheticOcean { background_amplitude: Some(a) } if !a.is_finite() => {
                return bad("background_amplitude must be finite".into());
            }
            _ => {}
        }
        let f = &self.flowmap;
        let [x0, x1, y0, y1] = f.domain;
        if !(x1 > x0) || !(y1 > y0) || f.domain.iter().any(|v| !v.is_finite()) {
            return bad("flowmap.domain must be [x_min, x_max, y_min, y_max] with positive extent".into());
        }
        if f.nx < 3 || f.ny < 3 {
            return bad("flowmap.nx and flowmap.ny must be at least 3".into());
        }
        if !(f.rho > 0.0 && f.rho <= 0.5) {
            return bad("flowmap.rho must lie in (0, 0.5]".into());
        }
        if !f.horizon.is_finite() || !f.t0.is_finite() {
            return bad("flowmap.t0 and flowmap.horizon must be finite".into());
        }
        if !(f.tolerance > 0.0) || f.rk4_steps == 0 {
            return bad("flowmap.tolerance and flowmap.rk4_steps must be positive".into());
        }
        if !(self.topology.max_pair_distance > 0.0) {
            return bad("topology.max_pair_distance must be positive".into());
        }
        if !(self.section.length > 0.0) || self.section.seeds < 2 {
            return bad("section.length must be positive and section.seeds at least 2".into());
        }
        let s = &self.sweep;
        if !(s.lambda_min > 0.0) || !(s.lambda_max >= s.lambda_min) || !(s.lambda_step > 0.0) {
            return bad("sweep needs 0 < lambda_min <= lambda_max and lambda_step > 0".into());
        }
        if !(s.line_step > 0.0) || !(s.max_arclength > 0.0) {
            return bad("sweep.line_step and sweep.max_arclength must be positive".into());
        }
        Ok(())
    }
}

/// Set `a.b.c = value` in `table`. The value is read as a TOML value when
/// it parses as one, and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.into()))?;
    let keys: Vec<&str> = key.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Override(spec.into()));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.into()));
    let mut t = table;
    for k in &keys[..keys.len() - 1] {
        let entry = t.entry((*k).to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| ConfigError::Override(spec.into()))?;
    }
    t.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GYRE: &str = r#"
        [input]
        kind = "double_gyre"
        amplitude = 0.2
        epsilon = 0.2
        omega = 0.6283185307179586

        [flowmap]
        horizon = 7.853981633974483
        domain = [0.0, 1.0, 0.0, 1.0]
        nx = 50
        ny = 50
    "#;

    #[test]
    fn defaults_fill_optional_sections() {
        let c = PipelineConfig::from_toml(GYRE, &[], Path::new("/cfg")).unwrap();
        assert_eq!(c.flowmap.rho, 0.1);
        assert_eq!(c.flowmap.method, MethodName::Rk45);
        assert_eq!(c.section, SectionConfig { length: 1.5, seeds: 100 });
        assert_eq!(c.sweep.signs, Signs::Both);
        assert_eq!(c.output.dir, PathBuf::from("/cfg/out"));
        let sw = c.sweep.to_sweep(0.02, 1.5);
        assert_eq!(sw.lambdas().len(), 31);
        assert_eq!(sw.integration, LineIntegration { step: 0.01, max_arclength: 30.0 });
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let o = vec!["flowmap.nx=80".to_string(), "sweep.signs=minus".into(), "output.dir=/tmp/x".into(), "section.length = 0.25".into()];
        let c = PipelineConfig::from_toml(GYRE, &o, Path::new(".")).unwrap();
        assert_eq!(c.flowmap.nx, 80);
        assert_eq!(c.sweep.signs, Signs::Minus);
        assert_eq!(c.output.dir, PathBuf::from("/tmp/x"));
        assert_eq!(c.section.length, 0.25);
        assert!(matches!(PipelineConfig::from_toml(GYRE, &["nokey".into()], Path::new(".")), Err(ConfigError::Override(_))));
        assert!(matches!(PipelineConfig::from_toml(GYRE, &["flowmap.nx.deep=1".into()], Path::new(".")), Err(ConfigError::Override(_))));
    }

    #[test]
    fn invalid_values_are_reported() {
        for o in ["flowmap.rho=0.7", "flowmap.nx=2", "input.epsilon=0.5", "sweep.lambda_step=0", "section.seeds=1"] {
            let r = PipelineConfig::from_toml(GYRE, &[o.to_string()], Path::new("."));
            assert!(matches!(r, Err(ConfigError::Invalid(_))), "{o}");
        }
        let r = PipelineConfig::from_toml(GYRE, &["flowmap.bogus=1".into()], Path::new("."));
        assert!(matches!(r, Err(ConfigError::Parse(_))));
    }

    #[test]
    fn missing_input_file_is_a_config_error() {
        let text = GYRE.replace("kind = \"double_gyre\"", "kind = \"gridded\"\npath = \"nope.toml\"").replace(
            "amplitude = 0.2\n        epsilon = 0.2\n        omega = 0.6283185307179586",
            "",
        );
        let r = PipelineConfig::from_toml(&text, &[], Path::new("/definitely/not/here"));
        assert!(matches!(r, Err(ConfigError::Invalid(_))), "{r:?}");
    }
}
