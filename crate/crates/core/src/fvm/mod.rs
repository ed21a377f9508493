//! Finite-volume transport on structured grids.

pub mod advection;
pub mod convergence;
pub mod diffusion;
pub mod solver;
pub mod source;

pub use advection::{advect_1d_step, courant_number, LineOutflow, LowerFace};
pub use diffusion::{diffuse_1d_step, ground_robin_spec, RobinSpec};
pub use solver::{
    accumulate_deposition, godunov_step, solve_forward, AtmosphericModel, Coefficients, ForwardSolution, MassAudit,
    StepControl, TransportModel,
};
pub use source::{inject_sources, prepare_sources, EmissionRate, PointSource, PreparedSource};
