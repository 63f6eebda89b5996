//! `vortex-census`: run the vortex census pipeline stage by stage or end to
//! end. Exit status 0 on success, 2 on configuration errors, 3 when a stage
//! fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vortex_census::config::{ConfigError, PipelineConfig};
use vortex_census::geojson::read_boundaries;
use vortex_census::pipeline::{self, Layout, PipelineError, Resume, Stage};
use vortex_census::render::{render_svg, Layer, Scene};
use vortex_census::{gridio, tables};

#[derive(Debug, Parser)]
#[command(name = "vortex-census", version, about = "Detect coherent Lagrangian vortex boundaries in planar flows")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set flowmap.nx=200`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; takes precedence over `output.dir`.
    #[arg(long, env = "VORTEX_OUTPUT_DIR", global = true)]
    output_dir: Option<PathBuf>,
    /// Checkpoint directory; defaults to `<output>/checkpoints`.
    #[arg(long, global = true)]
    checkpoint_dir: Option<PathBuf>,
    /// Worker threads (0: all cores); takes precedence over `output.threads`.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (repeatable).
    #[arg(long, short, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Advect the auxiliary grid and write the flow-map checkpoint.
    ComputeFlowmap,
    /// Build Cauchy-Green tensor and eigen checkpoints from the flow map.
    ComputeCg,
    /// Locate, select, classify and pair tensor singularities.
    DetectSingularities,
    /// Sweep λ-lines from each pair's Poincaré section.
    DetectVortices(VortexArgs),
    /// Run every stage, writing checkpoints and a stage report.
    RunCensus(CensusArgs),
    /// Draw the available outputs as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct VortexArgs {
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    lambda_step: Option<f64>,
    /// Poincaré section length in domain units.
    #[arg(long)]
    section_length: Option<f64>,
    /// Seeds per section.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, value_enum)]
    signs: Option<SignsArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignsArg {
    Both,
    Plus,
    Minus,
}

#[derive(Debug, Args)]
struct CensusArgs {
    /// Start from the Cauchy-Green checkpoint instead of the velocity field.
    #[arg(long)]
    resume: bool,
    /// Print the stage report as JSON instead of a table.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    vortex: VortexArgs,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Layers to draw; defaults to every layer whose data exists.
    #[arg(long, value_delimiter = ',', value_parser = parse_layer)]
    layers: Vec<Layer>,
    /// SVG file; defaults to `<output>/census.svg`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_layer(s: &str) -> Result<Layer, String> {
    Layer::parse(s).ok_or_else(|| format!("unknown layer '{s}' (backdrop, singularities, sections, boundaries)"))
}

impl VortexArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = Vec::new();
        let mut num = |key: &str, v: Option<f64>| {
            if let Some(v) = v {
                o.push(format!("{key}={v:?}"));
            }
        };
        num("sweep.lambda_min", self.lambda_min);
        num("sweep.lambda_max", self.lambda_max);
        num("sweep.lambda_step", self.lambda_step);
        num("section.length", self.section_length);
        if let Some(n) = self.seeds {
            o.push(format!("section.seeds={n}"));
        }
        if let Some(s) = self.signs {
            let name = match s {
                SignsArg::Both => "both",
                SignsArg::Plus => "plus",
                SignsArg::Minus => "minus",
            };
            o.push(format!("sweep.signs=\"{name}\""));
        }
        o
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn stage_err(stage: Stage, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage { stage, message: e.to_string() }
}

fn load(common: &Common, extra: Vec<String>) -> Result<(PipelineConfig, Layout), PipelineError> {
    let path = common.config.as_deref().ok_or_else(|| ConfigError::Invalid("--config is required".into()))?;
    let mut overrides = common.overrides.clone();
    overrides.extend(extra);
    let cfg = PipelineConfig::load(path, &overrides)?;
    let layout = layout(common, Some(&cfg));
    set_threads(common.threads.unwrap_or(cfg.output.threads))?;
    Ok((cfg, layout))
}

fn layout(common: &Common, cfg: Option<&PipelineConfig>) -> Layout {
    let out = common
        .output_dir
        .clone()
        .or_else(|| cfg.map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    Layout::new(out, common.checkpoint_dir.clone())
}

fn set_threads(n: usize) -> Result<(), PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| PipelineError::Config(ConfigError::Invalid(format!("thread pool: {e}"))))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let common = &cli.common;
    match &cli.command {
        Command::ComputeFlowmap => {
            let (cfg, layout) = load(common, Vec::new())?;
            let field = pipeline::velocity_field(&cfg.input)?;
            let fm = pipeline::compute_flowmap(&cfg, field.as_ref())?;
            pipeline::write_flowmap(&layout.flowmap(), &fm)?;
            println!("flow map: {} of {} nodes valid -> {}", fm.valid_count(), fm.grid.len(), layout.flowmap().display());
        }
        Command::ComputeCg => {
            let (_, layout) = load(common, Vec::new())?;
            let fm = gridio::read_flowmap(&layout.flowmap()).map_err(|e| stage_err(Stage::FlowMap, e))?;
            let (tf, ef) = vortex_core::cauchy_green::build_tensor_field(&fm);
            pipeline::write_cauchy_green(&layout, &tf, &ef)?;
            let valid = tf.valid.iter().filter(|v| **v).count();
            println!("cauchy-green: {valid} of {} nodes valid -> {}", tf.grid.len(), layout.checkpoints.display());
        }
        Command::DetectSingularities => {
            let (cfg, layout) = load(common, Vec::new())?;
            let (tf, _) = pipeline::read_cauchy_green(&layout)?;
            let topo = pipeline::detect_singularities(&tf, &cfg);
            pipeline::write_topology(&layout, &topo)?;
            println!(
                "{} located, {} isolated, {} wedges, {} pairs -> {}",
                topo.located.len(),
                topo.classified.len(),
                topo.wedges(),
                topo.pairs.len(),
                layout.singularities().display()
            );
        }
        Command::DetectVortices(args) => {
            let (cfg, layout) = load(common, args.overrides())?;
            let (tf, ef) = pipeline::read_cauchy_green(&layout)?;
            let sings = tables::read_singularities(&layout.singularities()).map_err(|e| stage_err(Stage::Classification, e))?;
            let pairs = tables::read_pairs(&layout.pairs(), &sings).map_err(|e| stage_err(Stage::Filtering, e))?;
            let field = pipeline::velocity_field(&cfg.input)?;
            let icfg = cfg.flowmap.integrator();
            let v = pipeline::detect_vortices(&tf, &ef, &sings, &pairs, &cfg, Some((field.as_ref(), &icfg)))?;
            pipeline::write_vortices(&layout, &v)?;
            for e in &v.eddies {
                println!("pair {}: λ = {:.3} ({}), area {:.6}", e.pair, e.boundary.lambda, e.boundary.branch, e.boundary.polygon.area());
            }
            println!("{} eddies from {} pairs -> {}", v.eddies.len(), pairs.len(), layout.boundaries().display());
        }
        Command::RunCensus(args) => {
            let (cfg, layout) = load(common, args.vortex.overrides())?;
            let resume = if args.resume { Resume::FromCauchyGreen } else { Resume::Fresh };
            let run = pipeline::run_census(&cfg, &layout, resume)?;
            if args.json {
                println!("{}", run.report.to_json());
            } else {
                println!("{}", run.report);
            }
        }
        Command::Render(args) => render(common, args)?,
    }
    Ok(())
}

fn render(common: &Common, args: &RenderArgs) -> Result<(), PipelineError> {
    let cfg = match &common.config {
        Some(path) => Some(PipelineConfig::load(path, &common.overrides)?),
        None => None,
    };
    let layout = layout(common, cfg.as_ref());
    let st = |e: &dyn std::fmt::Display| stage_err(Stage::Output, e);
    let exists = |p: &Path| p.exists();
    let eigen = if exists(&layout.eigen()) { Some(gridio::read_eigen(&layout.eigen()).map_err(|e| st(&e))?) } else { None };
    let located =
        if exists(&layout.located()) { Some(tables::read_singularities(&layout.located()).map_err(|e| st(&e))?) } else { None };
    let classified = if exists(&layout.singularities()) {
        Some(tables::read_singularities(&layout.singularities()).map_err(|e| st(&e))?)
    } else {
        None
    };
    let pairs = match (&classified, exists(&layout.pairs())) {
        (Some(c), true) => Some(tables::read_pairs(&layout.pairs(), c).map_err(|e| st(&e))?),
        _ => None,
    };
    let sections = if exists(&layout.sections()) { Some(tables::read_sections(&layout.sections()).map_err(|e| st(&e))?) } else { None };
    let boundaries = if exists(&layout.boundaries()) {
        let text = fs::read_to_string(layout.boundaries()).map_err(|e| st(&e))?;
        Some(read_boundaries(&text).map_err(|e| st(&e))?)
    } else {
        None
    };
    let scene = Scene {
        eigen: eigen.as_ref(),
        located: located.as_deref(),
        classified: classified.as_deref(),
        pairs: pairs.as_deref(),
        sections: sections.as_deref(),
        boundaries: boundaries.as_deref(),
        extent: cfg.map(|c| c.flowmap.grid().bounds()),
    };
    let layers: Vec<Layer> = if args.layers.is_empty() {
        Layer::ALL
            .into_iter()
            .filter(|l| match l {
                Layer::Backdrop => scene.eigen.is_some(),
                Layer::Singularities => scene.located.is_some() || scene.classified.is_some(),
                Layer::Sections => scene.sections.is_some(),
                Layer::Boundaries => scene.boundaries.is_some(),
            })
            .collect()
    } else {
        args.layers.clone()
    };
    let svg = render_svg(&scene, &layers).map_err(|e| st(&e))?;
    let out = args.out.clone().unwrap_or_else(|| layout.out.join("census.svg"));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| st(&e))?;
    }
    fs::write(&out, svg).map_err(|e| st(&e))?;
    println!("{} layer(s) -> {}", layers.len(), out.display());
    Ok(())
}
