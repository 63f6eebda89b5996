//! File formats, configuration, rendering and the staged census pipeline
//! built on `vortex-core`.

// `!(x > 0.0)` guards reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod geojson;
pub mod gridio;
pub mod pipeline;
pub mod render;
pub mod tables;

pub use config::PipelineConfig;
pub use pipeline::{run_census, CensusRun, Layout, PipelineError, Resume, Stage, StageReport};
