//! Normalized solutions of `-Δu + ωu = η(μ u^{p-1} + u^{q-1})` on balls.
//!
//! Radial shooting, mass-branch continuation, constrained gradient flows and
//! mountain-pass string relaxation, with certificates for every solution.

#![no_std]

extern crate alloc;

pub mod branch;
pub mod constants;
pub mod error;
pub mod ode;
pub mod pass;
pub mod problem;
pub mod quad;
pub mod roots;
pub mod shooter;
pub mod tridiag;
pub mod varflow;
pub mod verify;

pub use constants::{
    compactness_mass_threshold, gn_gamma, lambda1, sobolev_constant, Constants, FirstEigenpair,
};
pub use error::{BranchError, FlowError, OdeError, ParamError, PassError, ShootError};
pub use problem::{critical_exponent, sphere_area, ProblemSpec};
pub use shooter::{Classification, RadialSolution, ShootConfig, ShotResult, Shooter};
