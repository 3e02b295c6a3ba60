//! Upwind summation-by-parts finite-difference operators with SAT boundary
//! treatment, WENO flux reconstruction and energy stabilization.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod grid;
pub mod linalg;
pub mod normal_mode;
pub mod sat;
pub mod sbp;
pub mod stabilization;
pub mod stencil;
pub mod time;
pub mod weno;

pub use error::{Error, Result};
pub use experiments::{
    fit_rate, run_convergence, run_four_shapes, ConvergenceConfig, ConvergenceTable,
    FourShapesConfig, FourShapesScheme, SchemeKind,
};
pub use grid::{build_grid, Grid};
pub use sat::{
    advection_rhs, system_rhs, system_stability_check, AdvectionScheme, BoundaryData, RhsEvaluator,
    Semidiscretization, SpatialOperator, SystemParameters, SystemScheme,
};
pub use sbp::{build_upwind_pair, verify_sbp, SbpPropertyReport, UpwindPair};
pub use stabilization::{modify_lambda, LambdaFactors, StabilizedOperator};
pub use stencil::{CandidateFluxSet, Order};
pub use time::{integrate, rk4_step, IntegratorConfig, Trajectory};
pub use weno::{build_flux_grid, FluxGrid, SmoothnessData, WeightMode, WenoOperator};
