use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

use crate::pass::PathState;
use crate::varflow::FlowResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at r = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at r = {t}")]
    TooManySteps { t: f64 },
    #[error("non-finite state at r = {t}")]
    NonFinite { t: f64 },
}

/// Invalid problem or routine parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("dimension must be >= {min}, got {got}")]
    Dimension { min: u32, got: u32 },
    #[error("radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("exponents must satisfy 1 < p <= q, got p = {p}, q = {q}")]
    Exponents { p: f64, q: f64 },
    #[error("eta must lie in (0, 1], got {0}")]
    Eta(f64),
    #[error("mu must be finite, got {0}")]
    Mu(f64),
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: String,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootError {
    /// No undershoot/overshoot pair over the admissible center values.
    #[error("no shooting bracket at omega = {omega}")]
    NoBracket { omega: f64 },
    #[error("integrator failure: {0}")]
    Integrator(#[from] OdeError),
    #[error("shooting did not converge at omega = {omega} (relative residual {residual})")]
    NotConverged { omega: f64, residual: f64 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BranchError {
    #[error("no solvable point in lambda range [{lo}, {hi}]")]
    EmptyBranch { lo: f64, hi: f64 },
    #[error("mass is monotone across the sampled window")]
    NoInteriorMax,
    #[error("branch has {0} points, at least 5 are needed")]
    TooFewPoints(usize),
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, Error)]
pub enum FlowError {
    #[error("iteration cap reached (projected gradient {})", .0.constrained_grad_norm)]
    MaxIterations(Box<FlowResult>),
    #[error("energy stalled (projected gradient {})", .0.constrained_grad_norm)]
    EnergyStall(Box<FlowResult>),
    #[error("final iterate is not positive (min value {min})")]
    NotPositive { min: f64, last: Box<FlowResult> },
    #[error("domain too small: boundary value ratio {ratio}")]
    DomainTooSmall { ratio: f64 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, Error)]
pub enum PassError {
    #[error(
        "endpoint geometry fails: I(v1) = {near_energy}, I(v_eps0) = {far_energy}, boundary bound = {boundary_bound}"
    )]
    GeometryFail {
        near_energy: f64,
        far_energy: f64,
        boundary_bound: f64,
    },
    #[error("no admissible far endpoint scale found")]
    NoFarEndpoint,
    #[error("string relaxation stalled after {iterations} iterations (max-node gradient {grad})")]
    Stall {
        iterations: usize,
        grad: f64,
        last: Box<PathState>,
    },
    #[error("Newton diverged (residual {residual})")]
    NewtonDiverged { residual: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error(transparent)]
    Param(#[from] ParamError),
}
