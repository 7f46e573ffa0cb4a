use normbranch_core::constants::sobolev_constant;
use normbranch_core::pass::{Cutoff, NearEndpoint};
use normbranch_core::ProblemSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Run configuration as read from JSON. Unknown keys are rejected at every
/// level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: u32,
    pub radius: f64,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Solve(SolveArgs),
    Branch(Window),
    RhoStar(RhoStarArgs),
    Normalized(NormalizedArgs),
    Minimize(MinimizeArgs),
    Pass(PassArgs),
    Verify(VerifyArgs),
    Bubbles(BubbleArgs),
    Theta(ThetaArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Branch(_) => "branch",
            Command::RhoStar(_) => "rho-star",
            Command::Normalized(_) => "normalized",
            Command::Minimize(_) => "minimize",
            Command::Pass(_) => "pass",
            Command::Verify(_) => "verify",
            Command::Bubbles(_) => "bubbles",
            Command::Theta(_) => "theta",
        }
    }

    /// Default block for a subcommand name.
    pub fn default_for(name: &str) -> Option<Command> {
        Some(match name {
            "solve" => Command::Solve(SolveArgs::default()),
            "branch" => Command::Branch(Window::default()),
            "rho-star" => Command::RhoStar(RhoStarArgs::default()),
            "normalized" => Command::Normalized(NormalizedArgs::default()),
            "minimize" => Command::Minimize(MinimizeArgs::default()),
            "pass" => Command::Pass(PassArgs::default()),
            "verify" => Command::Verify(VerifyArgs::default()),
            "bubbles" => Command::Bubbles(BubbleArgs::default()),
            "theta" => Command::Theta(ThetaArgs::default()),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveArgs {
    pub omega: Option<f64>,
    /// Warm start for the center value.
    pub center_value: Option<f64>,
}

/// `λ` window and sample count for branch tracing. Without explicit ends
/// the Brezis–Nirenberg window shrunk by `offset·λ₁` is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Window {
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub offset: f64,
    pub points: usize,
}

impl Default for Window {
    fn default() -> Self {
        Self {
            lambda_min: None,
            lambda_max: None,
            offset: 0.01,
            points: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMethod {
    /// Maximum of the traced mass branch.
    #[default]
    Branch,
    /// Mass supremum over the multiplier window.
    Supremum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoStarArgs {
    pub method: RhoMethod,
    pub window: Window,
    /// Frequency samples for the supremum probe.
    pub samples: usize,
}

impl Default for RhoStarArgs {
    fn default() -> Self {
        Self {
            method: RhoMethod::Branch,
            window: Window::default(),
            samples: 500,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizedArgs {
    pub rho: Option<f64>,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeArgs {
    pub rho: Option<f64>,
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Localization level; the library policy when absent.
    pub alpha: Option<f64>,
}

impl Default for MinimizeArgs {
    fn default() -> Self {
        Self {
            rho: None,
            intervals: 2000,
            tol: 1e-9,
            max_iter: 20_000,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Near {
    #[default]
    Bubble,
    Minimizer,
}

impl From<Near> for NearEndpoint {
    fn from(n: Near) -> Self {
        match n {
            Near::Bubble => NearEndpoint::Bubble,
            Near::Minimizer => NearEndpoint::Minimizer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffArgs {
    pub r_in: f64,
    pub r_out: f64,
}

impl Default for CutoffArgs {
    fn default() -> Self {
        let c = Cutoff::default();
        Self {
            r_in: c.r_in,
            r_out: c.r_out,
        }
    }
}

impl From<CutoffArgs> for Cutoff {
    fn from(c: CutoffArgs) -> Self {
        Cutoff {
            r_in: c.r_in,
            r_out: c.r_out,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PassArgs {
    pub rho: Option<f64>,
    pub intervals: usize,
    pub nodes: usize,
    pub near: Near,
    pub cutoff: CutoffArgs,
    pub eps0: Option<f64>,
    pub alpha: Option<f64>,
    pub fine_intervals: Option<usize>,
    /// Slack in the lower level bound.
    pub delta: f64,
    /// When present, levels `c_η` are also computed over this grid.
    pub eta_grid: Option<Vec<f64>>,
}

impl Default for PassArgs {
    fn default() -> Self {
        Self {
            rho: None,
            intervals: 2000,
            nodes: 33,
            near: Near::Bubble,
            cutoff: CutoffArgs::default(),
            eps0: None,
            alpha: None,
            fine_intervals: None,
            delta: 0.0,
            eta_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    pub omegas: Vec<f64>,
    /// Intervals of the coarsest mesh in the residual refinement study.
    pub refine_intervals: usize,
}

impl Default for VerifyArgs {
    fn default() -> Self {
        Self {
            omegas: Vec::new(),
            refine_intervals: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleArgs {
    pub eps: Vec<f64>,
    pub cutoff: CutoffArgs,
}

impl Default for BubbleArgs {
    fn default() -> Self {
        Self {
            eps: vec![0.01, 0.005, 0.0025, 0.00125],
            cutoff: CutoffArgs::default(),
        }
    }
}

/// `θ_ε` at `ε = fraction · S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaArgs {
    pub fractions: Vec<f64>,
    pub intervals: usize,
}

impl Default for ThetaArgs {
    fn default() -> Self {
        Self {
            fractions: (0..10).map(|k| 0.02 + 0.96 * k as f64 / 9.0).collect(),
            intervals: 2000,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::config(msg)
}

fn positive(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(bad(format!("{name} must be positive and finite, got {x}"))),
        None => Err(bad(format!("{name} is required"))),
    }
}

fn check_window(spec: &ProblemSpec, w: &Window) -> Result<(), CliError> {
    if w.points < 5 {
        return Err(bad(format!("window.points must be at least 5, got {}", w.points)));
    }
    if !(w.offset > 0.0 && w.offset < 0.5) {
        return Err(bad(format!("window.offset must lie in (0, 0.5), got {}", w.offset)));
    }
    match (w.lambda_min, w.lambda_max) {
        (Some(a), Some(b)) if !(a < b) => Err(bad(format!("window needs lambda_min < lambda_max, got {a}, {b}"))),
        (Some(_), None) | (None, Some(_)) => Err(bad("window needs both lambda_min and lambda_max")),
        (None, None) if !spec.is_brezis_nirenberg() => {
            Err(bad("window needs lambda_min and lambda_max unless mu = 0 and q = 2*"))
        }
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        ProblemSpec::new(self.dimension, self.radius, self.mu, self.p, self.q)
            .and_then(|s| s.with_eta(self.eta))
            .map_err(|e| bad(e.to_string()))
    }

    /// Checks everything that does not need a solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let spec = self.spec()?;
        let Some(cmd) = &self.command else {
            return Err(bad("missing command block"));
        };
        match cmd {
            Command::Solve(a) => {
                let w = a.omega.ok_or_else(|| bad("solve needs omega"))?;
                if !w.is_finite() {
                    return Err(bad("omega must be finite"));
                }
                if let Some(c) = a.center_value {
                    positive("center_value", Some(c))?;
                }
            }
            Command::Branch(w) => check_window(&spec, w)?,
            Command::RhoStar(a) => match a.method {
                RhoMethod::Branch => check_window(&spec, &a.window)?,
                RhoMethod::Supremum if a.samples < 10 => return Err(bad("samples must be at least 10")),
                RhoMethod::Supremum => {}
            },
            Command::Normalized(a) => {
                check_window(&spec, &a.window)?;
                positive("rho", a.rho)?;
            }
            Command::Minimize(a) => {
                positive("rho", a.rho)?;
                positive("tol", Some(a.tol))?;
                if a.intervals < 10 || a.max_iter == 0 {
                    return Err(bad("minimize needs intervals >= 10 and max_iter >= 1"));
                }
                if let Some(al) = a.alpha {
                    positive("alpha", Some(al))?;
                }
            }
            Command::Pass(a) => {
                positive("rho", a.rho)?;
                if a.intervals < 10 || a.nodes < 5 {
                    return Err(bad("pass needs intervals >= 10 and nodes >= 5"));
                }
                Cutoff::from(a.cutoff).validate().map_err(|e| bad(e.to_string()))?;
                if let Some(e) = a.eps0 {
                    positive("eps0", Some(e))?;
                }
                if let Some(al) = a.alpha {
                    positive("alpha", Some(al))?;
                }
                if a.fine_intervals.is_some_and(|n| n < a.intervals) {
                    return Err(bad("fine_intervals must not be below intervals"));
                }
                if !(a.delta >= 0.0 && a.delta.is_finite()) {
                    return Err(bad("delta must be nonnegative"));
                }
                if let Some(g) = &a.eta_grid {
                    if g.is_empty() || g.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(bad("eta_grid must be nonempty and increasing"));
                    }
                    for &e in g {
                        spec.with_eta(e).map_err(|e| bad(e.to_string()))?;
                    }
                }
                if !spec.is_critical() {
                    return Err(bad("pass needs q = 2*"));
                }
            }
            Command::Verify(a) => {
                if a.omegas.is_empty() || a.omegas.iter().any(|w| !w.is_finite()) {
                    return Err(bad("verify needs a nonempty list of finite omegas"));
                }
                if a.refine_intervals < 10 {
                    return Err(bad("refine_intervals must be at least 10"));
                }
            }
            Command::Bubbles(a) => {
                if spec.dimension < 3 {
                    return Err(bad("bubbles need dimension >= 3"));
                }
                if a.eps.len() < 4 || a.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                    return Err(bad("bubbles need at least 4 eps values in (0, 1)"));
                }
                Cutoff::from(a.cutoff).validate().map_err(|e| bad(e.to_string()))?;
            }
            Command::Theta(a) => {
                sobolev_constant(spec.dimension).map_err(|e| bad(e.to_string()))?;
                if a.fractions.is_empty() || a.fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
                    return Err(bad("theta fractions must lie in (0, 1)"));
                }
                if a.fractions.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad("theta fractions must be increasing"));
                }
                if a.intervals < 10 {
                    return Err(bad("intervals must be at least 10"));
                }
            }
        }
        Ok(())
    }
}
