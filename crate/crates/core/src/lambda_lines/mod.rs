//! λ-lines: trajectories of the line fields `η_λ^±` along which material
//! curves are uniformly stretched by `λ`, and their closed orbits.

pub mod eta;
pub mod integrate;
pub mod section;
pub mod sweep;

pub use eta::{eta_direction, extend_eta, Branch, EtaError, EtaFieldSpec, FnLineField, LineField, LineFieldError, TensorEtaField};
pub use integrate::{integrate_lambda_line, integrate_with, rk4_step, HaltReason, LambdaLine, LineIntegration, Step};
pub use section::{
    build_section, find_closed_orbits, find_closed_orbits_par, return_distance, return_from, ClosedOrbit, NoReturn,
    PoincareSection, Return, SectionError, CLOSURE_TOLERANCE,
};
pub use sweep::{lambda_values, stretching_ratio, sweep_all, sweep_lambda, SweepConfig, VortexBoundary};
