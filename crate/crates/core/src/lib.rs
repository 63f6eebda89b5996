//! Automated detection of coherent Lagrangian vortex boundaries in planar
//! unsteady flows.
//!
//! The pipeline runs in five stages over a velocity field:
//!
//! 1. advect a grid of initial conditions and difference the flow map
//!    ([`flowmap`]),
//! 2. build the Cauchy-Green strain tensor and its eigen-structure
//!    ([`cauchy_green`]),
//! 3. locate, select and classify tensor singularities, then pair isolated
//!    wedges ([`topology`]),
//! 4. launch λ-lines from Poincaré sections anchored at wedge pairs and
//!    refine closed orbits ([`lambda_lines`]),
//! 5. keep the outermost closed orbit whose interior holds exactly the
//!    two wedges of its pair.
//!
//! The crate is `no_std` (with `alloc`). Enabling the `parallel` feature
//! pulls in `std` and spreads grid-wide work over a rayon pool; results are
//! bit-identical either way.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` guards reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cauchy_green;
pub mod flowmap;
pub mod geometry;
pub mod grid;
pub mod lambda_lines;
pub mod topology;
pub mod velocity;

mod par;

pub use cauchy_green::{EigenField, SymTensor, SymmetricTensorField};
pub use flowmap::{FlowMapGrid, IntegratorConfig, Method};
pub use geometry::{Mat2, Point};
pub use grid::{Axis, GridSpec};
pub use lambda_lines::{EtaFieldSpec, PoincareSection, VortexBoundary};
pub use topology::{ClosedPolygon, Singularity, SingularityType, WedgePair};
pub use velocity::VelocityField;
