//! The five-stage census: flow map, Cauchy-Green tensor, singularity
//! localization / selection / classification / filtering, and λ-line
//! integration from Poincaré sections, with a checkpoint after each stage.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use vortex_core::cauchy_green::{build_tensor_field, EigenField, SymmetricTensorField};
use vortex_core::flowmap::{compute_flow_map_grid, FlowMapGrid, IntegratorConfig};
use vortex_core::lambda_lines::{build_section, stretching_ratio, sweep_lambda, PoincareSection, VortexBoundary};
use vortex_core::topology::{classify_all, locate_singularities, pair_wedges, select_isolated, Census};
use vortex_core::velocity::synthetic::{three_eddy_axes, three_eddy_scenario};
use vortex_core::velocity::{geostrophic_from_ssh_with_floor, DoubleGyre, Uniform, VelocityField, DEFAULT_CORIOLIS_FLOOR};
use vortex_core::{Point, Singularity, SingularityType, WedgePair};

use crate::config::{ConfigError, InputConfig, PipelineConfig};
use crate::geojson;
use crate::gridio;
use crate::tables;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage '{stage}' failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    /// Process exit status: 2 for configuration problems, 3 for a failed
    /// stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }

    fn stage(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Stage { stage, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    FlowMap,
    CauchyGreen,
    Localization,
    Selection,
    Classification,
    Filtering,
    Integration,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::FlowMap => "flow map",
            Stage::CauchyGreen => "cauchy-green",
            Stage::Localization => "localization",
            Stage::Selection => "selection",
            Stage::Classification => "classification",
            Stage::Filtering => "filtering",
            Stage::Integration => "integration",
            Stage::Output => "output",
        })
    }
}

/// File layout of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub out: PathBuf,
    pub checkpoints: PathBuf,
}

impl Layout {
    pub fn new(out: impl Into<PathBuf>, checkpoints: Option<PathBuf>) -> Self {
        let out = out.into();
        let checkpoints = checkpoints.unwrap_or_else(|| out.join("checkpoints"));
        Layout { out, checkpoints }
    }

    pub fn flowmap(&self) -> PathBuf {
        self.checkpoints.join("flowmap.toml")
    }
    pub fn tensor(&self) -> PathBuf {
        self.checkpoints.join("tensor.toml")
    }
    pub fn eigen(&self) -> PathBuf {
        self.checkpoints.join("eigen.toml")
    }
    pub fn located(&self) -> PathBuf {
        self.out.join("singularities_located.csv")
    }
    pub fn singularities(&self) -> PathBuf {
        self.out.join("singularities.csv")
    }
    pub fn pairs(&self) -> PathBuf {
        self.out.join("pairs.csv")
    }
    pub fn sections(&self) -> PathBuf {
        self.out.join("sections.csv")
    }
    pub fn boundaries(&self) -> PathBuf {
        self.out.join("boundaries.geojson")
    }
    pub fn boundary_vertices(&self) -> PathBuf {
        self.out.join("boundaries.csv")
    }
    pub fn report_json(&self) -> PathBuf {
        self.out.join("report.json")
    }
    pub fn report_table(&self) -> PathBuf {
        self.out.join("report.txt")
    }
}

/// The configured velocity field.
pub fn velocity_field(input: &InputConfig) -> Result<Box<dyn VelocityField>, PipelineError> {
    let st = |e: &dyn fmt::Display| PipelineError::stage(Stage::Input, e);
    Ok(match input {
        InputConfig::DoubleGyre { amplitude, epsilon, omega } => {
            Box::new(DoubleGyre::new(*amplitude, *epsilon, *omega).map_err(|e| st(&e))?)
        }
        InputConfig::SyntheticOcean { background_amplitude } => {
            let mut ocean = three_eddy_scenario();
            if let Some(a) = background_amplitude {
                for w in &mut ocean.background {
                    w.amplitude = *a;
                }
            }
            let (lon, lat, time) = three_eddy_axes();
            let ssh = ocean.sample(lon, lat, time);
            Box::new(geostrophic_from_ssh_with_floor(&ssh, &Default::default(), DEFAULT_CORIOLIS_FLOOR).map_err(|e| st(&e))?)
        }
        InputConfig::Gridded { path } => {
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                Box::new(tables::read_velocity_csv(path).map_err(|e| st(&e))?)
            } else {
                Box::new(gridio::read_velocity(path).map_err(|e| st(&e))?)
            }
        }
        InputConfig::Ssh { path, coriolis_floor } => {
            let ssh = gridio::read_ssh(path).map_err(|e| st(&e))?;
            let floor = coriolis_floor.unwrap_or(DEFAULT_CORIOLIS_FLOOR);
            Box::new(geostrophic_from_ssh_with_floor(&ssh, &Default::default(), floor).map_err(|e| st(&e))?)
        }
        InputConfig::Rest => Box::new(Uniform(Point::ZERO)),
    })
}

pub fn compute_flowmap(cfg: &PipelineConfig, field: &dyn VelocityField) -> Result<FlowMapGrid, PipelineError> {
    compute_flow_map_grid(field, cfg.flowmap.grid(), cfg.flowmap.rho, &cfg.flowmap.integrator())
        .map_err(|e| PipelineError::stage(Stage::FlowMap, e))
}

/// Output of the topology stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// Every located singularity.
    pub located: Vec<Singularity>,
    /// Isolated singularities with their types.
    pub classified: Vec<Singularity>,
    /// Pairs indexing into `classified`.
    pub pairs: Vec<WedgePair>,
    /// Seconds spent in localization, selection, classification, filtering.
    pub seconds: [f64; 4],
}

impl Topology {
    pub fn wedges(&self) -> usize {
        self.classified.iter().filter(|s| s.kind == SingularityType::Wedge).count()
    }

    /// Distinct wedges taking part in a pair.
    pub fn filtered_wedges(&self) -> usize {
        let mut ids: Vec<usize> = self.pairs.iter().flat_map(|p| [p.first, p.second]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

pub fn detect_singularities(tf: &SymmetricTensorField, cfg: &PipelineConfig) -> Topology {
    let dx = tf.grid.spacing();
    let t = Instant::now();
    let located = locate_singularities(tf);
    let t_locate = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let selected = select_isolated(&located, dx);
    let t_select = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let classified = classify_all(tf, &selected, &located);
    let t_classify = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let pairs = pair_wedges(&classified, cfg.topology.max_pair_distance);
    let t_filter = t.elapsed().as_secs_f64();
    log::info!("{} singularities located, {} isolated, {} pairs", located.len(), classified.len(), pairs.len());
    Topology { located, classified, pairs, seconds: [t_locate, t_select, t_classify, t_filter] }
}

/// An accepted vortex boundary and the pair it was found from.
#[derive(Debug, Clone, PartialEq)]
pub struct Eddy {
    pub pair: usize,
    pub boundary: VortexBoundary,
    /// Advected-to-initial perimeter ratio, when the velocity field was
    /// available to advect the boundary.
    pub stretching_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vortices {
    pub sections: Vec<(usize, PoincareSection)>,
    pub eddies: Vec<Eddy>,
    pub seconds: f64,
}

/// Sweep every pair's section. Each accepted boundary must enclose exactly
/// the two wedges of its pair; anything else aborts the stage.
pub fn detect_vortices(
    tf: &SymmetricTensorField,
    ef: &EigenField,
    sings: &[Singularity],
    pairs: &[WedgePair],
    cfg: &PipelineConfig,
    advect: Option<(&dyn VelocityField, &IntegratorConfig)>,
) -> Result<Vortices, PipelineError> {
    let t = Instant::now();
    let bounds = tf.grid.bounds();
    let mut sections = Vec::new();
    let mut eddies = Vec::new();
    for (k, pair) in pairs.iter().enumerate() {
        if !bounds.contains(pair.midpoint) {
            log::warn!("pair {k}: midpoint outside the grid, skipped");
            continue;
        }
        let section = build_section(pair.midpoint, cfg.section.length, cfg.section.seeds, Some(bounds))
            .map_err(|e| PipelineError::stage(Stage::Integration, format!("pair {k}: {e}")))?;
        if section.truncated {
            log::warn!("pair {k}: section cut to {:.6} at the domain edge", section.length());
        }
        let sweep = cfg.sweep.to_sweep(tf.grid.spacing(), section.length());
        let found = sweep_lambda(tf, ef, sings, pair, &section, &sweep);
        sections.push((k, section));
        let Some(boundary) = found else { continue };
        let expected = Census { wedges: 2, trisectors: 0, unclassified: 0 };
        if boundary.census != expected || !boundary.census.satisfies_index_balance() {
            return Err(PipelineError::stage(
                Stage::Integration,
                format!("pair {k}: accepted boundary encloses {:?}, expected two wedges only", boundary.census),
            ));
        }
        let stretching_ratio = match advect {
            Some((field, icfg)) => Some(
                stretching_ratio(field, &boundary.polygon, icfg)
                    .map_err(|e| PipelineError::stage(Stage::Integration, format!("pair {k}: advecting boundary: {e}")))?,
            ),
            None => None,
        };
        log::info!("pair {k}: boundary at λ = {:.3} ({})", boundary.lambda, boundary.branch);
        eddies.push(Eddy { pair: k, boundary, stretching_ratio });
    }
    Ok(Vortices { sections, eddies, seconds: t.elapsed().as_secs_f64() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
    pub count: usize,
    pub unit: &'static str,
}

/// Runtime and object counts per stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stages: Vec<StageRecord>,
    pub valid_nodes: usize,
    pub located: usize,
    pub selected: usize,
    pub wedges: usize,
    pub filtered_wedges: usize,
    pub pairs: usize,
    pub eddies: usize,
    /// Stage the run was resumed from, if any.
    pub resumed_from: Option<Stage>,
}

impl StageReport {
    /// Counts from localization to the end result.
    pub fn funnel(&self) -> [usize; 6] {
        [self.located, self.selected, self.wedges, self.filtered_wedges, self.pairs, self.eddies]
    }

    pub fn is_monotone(&self) -> bool {
        self.funnel().windows(2).all(|w| w[1] <= w[0])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for StageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<18} {:>10}  count", "stage", "runtime")?;
        for r in &self.stages {
            writeln!(f, "{:<18} {:>8.2} s  {} {}", r.stage.to_string(), r.seconds, r.count, r.unit)?;
        }
        write!(f, "{:<18} {:>10}  {} eddies", "end result", "-", self.eddies)
    }
}

/// Where a run starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resume {
    /// Compute everything.
    Fresh,
    /// Read the Cauchy-Green checkpoint and start at localization.
    FromCauchyGreen,
}

/// In-memory results of a run, next to what was written to disk.
#[derive(Debug)]
pub struct CensusRun {
    pub report: StageReport,
    pub flowmap: Option<FlowMapGrid>,
    pub tensor: SymmetricTensorField,
    pub eigen: EigenField,
    pub topology: Topology,
    pub vortices: Vortices,
}

pub fn write_flowmap(path: &Path, fm: &FlowMapGrid) -> Result<(), PipelineError> {
    gridio::write_grid(path, &gridio::flowmap_to_grid(fm)).map_err(|e| PipelineError::stage(Stage::FlowMap, e))
}

pub fn write_cauchy_green(layout: &Layout, tf: &SymmetricTensorField, ef: &EigenField) -> Result<(), PipelineError> {
    let st = |e| PipelineError::stage(Stage::CauchyGreen, e);
    gridio::write_grid(&layout.tensor(), &gridio::tensor_to_grid(tf)).map_err(st)?;
    gridio::write_grid(&layout.eigen(), &gridio::eigen_to_grid(ef)).map_err(st)
}

pub fn read_cauchy_green(layout: &Layout) -> Result<(SymmetricTensorField, EigenField), PipelineError> {
    let st = |e| PipelineError::stage(Stage::CauchyGreen, e);
    let tf = gridio::read_tensor(&layout.tensor()).map_err(st)?;
    let ef = gridio::read_eigen(&layout.eigen()).map_err(st)?;
    if tf.grid != ef.grid {
        return Err(PipelineError::stage(Stage::CauchyGreen, "tensor and eigen checkpoints are on different grids"));
    }
    Ok((tf, ef))
}

pub fn write_topology(layout: &Layout, topo: &Topology) -> Result<(), PipelineError> {
    let st = |e| PipelineError::stage(Stage::Filtering, e);
    tables::write_singularities(&layout.located(), &topo.located).map_err(st)?;
    tables::write_singularities(&layout.singularities(), &topo.classified).map_err(st)?;
    tables::write_pairs(&layout.pairs(), &topo.pairs, &topo.classified).map_err(st)
}

pub fn write_vortices(layout: &Layout, v: &Vortices) -> Result<(), PipelineError> {
    let st = |e: &dyn fmt::Display| PipelineError::stage(Stage::Output, e);
    tables::write_sections(&layout.sections(), &v.sections).map_err(|e| st(&e))?;
    fs::create_dir_all(&layout.out).map_err(|e| st(&e))?;
    fs::write(layout.boundaries(), geojson::boundaries_to_geojson(&v.eddies)).map_err(|e| st(&e))?;
    tables::write_boundary_vertices(&layout.boundary_vertices(), v.eddies.iter().map(|e| e.boundary.polygon.vertices()))
        .map_err(|e| st(&e))
}

fn write_report(layout: &Layout, report: &StageReport) -> Result<(), PipelineError> {
    let st = |e: std::io::Error| PipelineError::stage(Stage::Output, e);
    fs::create_dir_all(&layout.out).map_err(st)?;
    fs::write(layout.report_json(), report.to_json()).map_err(st)?;
    fs::write(layout.report_table(), format!("{report}\n")).map_err(st)
}

/// Run the whole census, writing checkpoints and outputs under `layout`.
pub fn run_census(cfg: &PipelineConfig, layout: &Layout, resume: Resume) -> Result<CensusRun, PipelineError> {
    let field = velocity_field(&cfg.input)?;
    let icfg = cfg.flowmap.integrator();
    let mut stages = Vec::new();
    let (flowmap, tf, ef) = match resume {
        Resume::Fresh => {
            let t = Instant::now();
            let fm = compute_flowmap(cfg, field.as_ref())?;
            write_flowmap(&layout.flowmap(), &fm)?;
            let valid = fm.valid_count();
            stages.push(StageRecord { stage: Stage::FlowMap, seconds: t.elapsed().as_secs_f64(), count: valid, unit: "valid nodes" });
            let t = Instant::now();
            let (tf, ef) = build_tensor_field(&fm);
            write_cauchy_green(layout, &tf, &ef)?;
            let valid = tf.valid.iter().filter(|v| **v).count();
            stages.push(StageRecord { stage: Stage::CauchyGreen, seconds: t.elapsed().as_secs_f64(), count: valid, unit: "valid nodes" });
            (Some(fm), tf, ef)
        }
        Resume::FromCauchyGreen => {
            let (tf, ef) = read_cauchy_green(layout)?;
            (None, tf, ef)
        }
    };
    let valid_nodes = tf.valid.iter().filter(|v| **v).count();

    let topo = detect_singularities(&tf, cfg);
    write_topology(layout, &topo)?;
    let [a, b, c, d] = topo.seconds;
    stages.push(StageRecord { stage: Stage::Localization, seconds: a, count: topo.located.len(), unit: "singularities" });
    stages.push(StageRecord { stage: Stage::Selection, seconds: b, count: topo.classified.len(), unit: "singularities" });
    stages.push(StageRecord { stage: Stage::Classification, seconds: c, count: topo.wedges(), unit: "wedges" });
    stages.push(StageRecord { stage: Stage::Filtering, seconds: d, count: topo.filtered_wedges(), unit: "wedges" });

    let vortices = detect_vortices(&tf, &ef, &topo.classified, &topo.pairs, cfg, Some((field.as_ref(), &icfg)))?;
    write_vortices(layout, &vortices)?;
    stages.push(StageRecord { stage: Stage::Integration, seconds: vortices.seconds, count: topo.pairs.len(), unit: "wedge pairs" });

    let report = StageReport {
        stages,
        valid_nodes,
        located: topo.located.len(),
        selected: topo.classified.len(),
        wedges: topo.wedges(),
        filtered_wedges: topo.filtered_wedges(),
        pairs: topo.pairs.len(),
        eddies: vortices.eddies.len(),
        resumed_from: (resume == Resume::FromCauchyGreen).then_some(Stage::CauchyGreen),
    };
    write_report(layout, &report)?;
    Ok(CensusRun { report, flowmap, tensor: tf, eigen: ef, topology: topo, vortices })
}
