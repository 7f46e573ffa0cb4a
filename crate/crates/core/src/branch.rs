//! The fixed-frequency ground-state family as a function of `λ = -ω`: mass
//! curve `ρ(λ)`, its maximum `ρ*`, normalized solutions at prescribed mass and
//! the mass supremum probe.

use alloc::vec::Vec;

use crate::constants::lambda1;
use crate::error::{BranchError, ParamError, ShootError};
use crate::problem::{critical_exponent, ProblemSpec};
use crate::quad::Pchip;
use crate::roots::{brent, golden_max};
use crate::shooter::{RadialSolution, Shooter};
use crate::verify::{in_multiplier_regime, multiplier_upper_bound, nehari_residual, pohozaev_residual, RESIDUAL_TOL};

/// Continuation steps in `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepPolicy {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
}

impl StepPolicy {
    /// Uniform spacing giving `points` samples over `range`.
    pub fn uniform(range: (f64, f64), points: usize) -> Self {
        let step = (range.1 - range.0) / (points.max(2) - 1) as f64;
        Self {
            initial: step,
            min: step / 64.0,
            max: step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EndpointStatus {
    /// Mass at the end sample is below 10% of the branch maximum and
    /// decreasing toward the end.
    Vanished,
    /// Shooting fails at the window end.
    NoSolution,
    /// The window ends while solutions still carry mass.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BranchPoint {
    pub lambda: f64,
    pub omega: f64,
    pub center_value: f64,
    pub rho: f64,
    pub energy: f64,
    pub grad_norm_sq: f64,
    pub boundary_slope: f64,
    pub pohozaev_residual: f64,
    pub nehari_residual: f64,
    pub solution: RadialSolution,
}

impl BranchPoint {
    /// Certified point, or `None` when a residual exceeds the tolerance.
    pub fn new(solution: RadialSolution) -> Option<Self> {
        let p = pohozaev_residual(&solution);
        let n = nehari_residual(&solution);
        (p <= RESIDUAL_TOL && n <= RESIDUAL_TOL).then(|| Self {
            lambda: -solution.omega,
            omega: solution.omega,
            center_value: solution.center_value,
            rho: solution.rho,
            energy: solution.energy,
            grad_norm_sq: solution.grad_norm_sq,
            boundary_slope: solution.boundary_slope,
            pohozaev_residual: p,
            nehari_residual: n,
            solution,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Branch {
    pub spec: ProblemSpec,
    /// Strictly increasing in `λ`.
    pub points: Vec<BranchPoint>,
    /// Requested `λ` window.
    pub window: (f64, f64),
    pub lower: EndpointStatus,
    pub upper: EndpointStatus,
    /// Sub-windows where shooting failed between solvable points.
    pub gaps: Vec<(f64, f64)>,
}

impl Branch {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rho).collect()
    }

    /// Largest `‖u_{λ_{i+1}} - u_{λ_i}‖_∞` between consecutive points.
    pub fn max_sup_jump(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].solution.sup_distance(&w[1].solution))
            .fold(0.0, f64::max)
    }
}

/// Default window for `μ = 0`, `q = 2*`: `λ ∈ (λ₁/4, λ₁)` for `N = 3` and
/// `(0, λ₁)` for `N ≥ 4`, shrunk by `offset·λ₁` at both ends.
pub fn brezis_nirenberg_window(spec: &ProblemSpec, offset: f64) -> (f64, f64) {
    let l1 = lambda1(spec.dimension, spec.radius);
    let lo = if spec.dimension == 3 { 0.25 * l1 } else { 0.0 };
    (lo + offset * l1, l1 * (1.0 - offset))
}

fn shoot_at(shooter: &Shooter, lambda: f64, seed: Option<f64>) -> Result<BranchPoint, ShootError> {
    let sol = match seed {
        Some(a) => shooter.shoot_from(-lambda, a),
        None => shooter.shoot_ground_state(-lambda),
    }?;
    let residual = pohozaev_residual(&sol).max(nehari_residual(&sol));
    BranchPoint::new(sol).ok_or(ShootError::NotConverged {
        omega: -lambda,
        residual,
    })
}

/// Natural continuation in `λ` with warm-started shooting. A failed step is
/// halved down to `policy.min`; past that the failure is an endpoint, or a
/// gap when a later cold start succeeds.
pub fn trace_branch(spec: &ProblemSpec, range: (f64, f64), policy: &StepPolicy) -> Result<Branch, BranchError> {
    trace_with(&Shooter::new(*spec), range, policy)
}

pub fn trace_with(shooter: &Shooter, range: (f64, f64), policy: &StepPolicy) -> Result<Branch, BranchError> {
    let spec = shooter.spec;
    let (lo, hi) = range;
    if !(lo < hi) || !(policy.min > 0.0 && policy.min <= policy.initial && policy.initial <= policy.max) {
        return Err(ParamError::OutOfRange {
            name: "lambda range",
            value: lo,
            range: alloc::format!("lo < hi = {hi} with 0 < min <= initial <= max"),
        }
        .into());
    }
    let snap = 1e-9 * (hi - lo);
    let mut points: Vec<BranchPoint> = Vec::new();
    let mut gaps = Vec::new();
    let mut lower_failed = false;
    let mut upper_failed = false;
    let mut lambda = lo;
    let mut step = policy.initial;
    loop {
        let seed = points.last().map(|p| p.center_value);
        match shoot_at(shooter, lambda, seed) {
            Ok(pt) => {
                points.push(pt);
                if lambda >= hi {
                    break;
                }
                step = (2.0 * step).min(policy.max).max(policy.initial.min(step));
                lambda = next_lambda(lambda, step, hi, snap);
            }
            Err(_) if points.is_empty() => {
                if lambda == lo {
                    lower_failed = true;
                }
                if lambda >= hi {
                    break;
                }
                lambda = next_lambda(lambda, policy.initial, hi, snap);
            }
            Err(_) => {
                let last = points[points.len() - 1].lambda;
                step *= 0.5;
                if step >= policy.min {
                    lambda = next_lambda(last, step, hi, snap);
                    continue;
                }
                // persistent failure: look for a later solvable point
                let mut probe = next_lambda(last, policy.initial, hi, snap);
                let mut resumed = false;
                loop {
                    if let Ok(pt) = shoot_at(shooter, probe, None) {
                        gaps.push((last, probe));
                        points.push(pt);
                        resumed = true;
                        break;
                    }
                    if probe >= hi {
                        break;
                    }
                    probe = next_lambda(probe, policy.initial, hi, snap);
                }
                if !resumed {
                    upper_failed = true;
                    break;
                }
                if probe >= hi {
                    break;
                }
                step = policy.initial;
                lambda = next_lambda(probe, step, hi, snap);
            }
        }
    }
    if points.is_empty() {
        return Err(BranchError::EmptyBranch { lo, hi });
    }
    let peak = points.iter().map(|p| p.rho).fold(0.0, f64::max);
    let status = |failed: bool, end: &BranchPoint, inner: Option<&BranchPoint>| {
        if failed {
            EndpointStatus::NoSolution
        } else if end.rho < 0.1 * peak && inner.map_or(false, |q| q.rho > end.rho) {
            EndpointStatus::Vanished
        } else {
            EndpointStatus::Boundary
        }
    };
    let n = points.len();
    let lower = status(lower_failed, &points[0], points.get(1));
    let upper = status(upper_failed, &points[n - 1], if n > 1 { points.get(n - 2) } else { None });
    Ok(Branch {
        spec,
        points,
        window: range,
        lower,
        upper,
        gaps,
    })
}

fn next_lambda(from: f64, step: f64, hi: f64, snap: f64) -> f64 {
    let x = from + step;
    if x > hi - snap {
        hi
    } else {
        x
    }
}

/// Branch maximum of `ρ(λ)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RhoStar {
    pub rho_star: f64,
    pub lambda_star: f64,
    pub solution: RadialSolution,
    /// Maximum of the monotone-cubic interpolant before re-shooting.
    pub interpolated: (f64, f64),
}

/// Interior extremum of shot `ρ(λ)` between `a < b`, seeded at `seed`.
fn refine_extremum(shooter: &Shooter, a: f64, b: f64, seed: f64, sign: f64) -> Option<(f64, RadialSolution)> {
    let mut best: Option<RadialSolution> = None;
    let mut center = seed;
    let f = |lambda: f64| -> f64 {
        match shooter.shoot_from(-lambda, center) {
            Ok(s) => {
                let v = sign * s.rho;
                center = s.center_value;
                if best.as_ref().map_or(true, |b| v > sign * b.rho) {
                    best = Some(s);
                }
                v
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };
    golden_max(f, a, b, 1e-9 * (b - a).abs().max(1e-300), 200);
    let s = best?;
    Some((-s.omega, s))
}

/// `ρ* = max ρ(λ)`: golden section on the monotone-cubic interpolant, then on
/// re-shot `ρ(λ)` over the neighbouring samples.
pub fn find_rho_star(branch: &Branch) -> Result<RhoStar, BranchError> {
    let pts = &branch.points;
    if pts.len() < 5 {
        return Err(BranchError::TooFewPoints(pts.len()));
    }
    let i = pts
        .iter()
        .enumerate()
        .fold(0, |bi, (k, p)| if p.rho > pts[bi].rho { k } else { bi });
    if i == 0 || i == pts.len() - 1 {
        return Err(BranchError::NoInteriorMax);
    }
    let lam = branch.lambdas();
    let pchip = Pchip::new(&lam, &branch.masses());
    let (a, b) = (lam[i - 1], lam[i + 1]);
    let interpolated = golden_max(|x| pchip.eval(x), a, b, 1e-12 * (b - a), 200);
    let shooter = Shooter::new(branch.spec);
    let (lambda_star, solution) = refine_extremum(&shooter, a, b, pts[i].center_value, 1.0).ok_or(BranchError::NoInteriorMax)?;
    Ok(RhoStar {
        rho_star: solution.rho,
        lambda_star,
        solution,
        interpolated,
    })
}

/// A solution with prescribed mass.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormalizedSolution {
    pub omega: f64,
    pub solution: RadialSolution,
    /// Produced by the tangency rule at a branch extremum.
    pub tangency: bool,
}

/// Relative mass window in which an extremum counts as the single solution.
pub const TANGENCY_TOL: f64 = 1e-6;

/// All solutions of mass `rho` along the branch. On each monotone piece of
/// `ρ(λ)` the crossing is bracketed by samples and solved by Brent on re-shot
/// `ρ(λ)`. A mass within [`TANGENCY_TOL`] of an interior extremum yields that
/// extremum as one solution. Counts are exact only when fixed-frequency
/// uniqueness holds (see [`count_is_exact`]); otherwise they are lower bounds.
pub fn solve_normalized(branch: &Branch, rho: f64) -> Vec<NormalizedSolution> {
    let shooter = Shooter::new(branch.spec);
    let pts = &branch.points;
    if pts.is_empty() || !(rho > 0.0) {
        return Vec::new();
    }
    // samples as (λ, ρ, center value), with refined interior extrema inserted
    let mut samples: Vec<(f64, f64, f64, Option<RadialSolution>)> =
        pts.iter().map(|p| (p.lambda, p.rho, p.center_value, None)).collect();
    let mut k = 1;
    while k + 1 < samples.len() {
        let (l, m, r) = (samples[k - 1].1, samples[k].1, samples[k + 1].1);
        let sign = if m > l && m >= r {
            1.0
        } else if m < l && m <= r {
            -1.0
        } else {
            0.0
        };
        if sign != 0.0 && samples[k].3.is_none() {
            if let Some((lam, sol)) = refine_extremum(&shooter, samples[k - 1].0, samples[k + 1].0, samples[k].2, sign) {
                let entry = (lam, sol.rho, sol.center_value, Some(sol));
                if lam > samples[k - 1].0 && lam < samples[k + 1].0 {
                    if (lam - samples[k].0).abs() <= 1e-14 * lam.abs().max(1.0) {
                        samples[k] = entry;
                    } else if lam < samples[k].0 {
                        samples.insert(k, entry);
                    } else {
                        samples.insert(k + 1, entry);
                        k += 1;
                    }
                }
            }
        }
        k += 1;
    }
    let mut out = Vec::new();
    let mut used = alloc::vec![false; samples.len()];
    for (j, s) in samples.iter().enumerate() {
        if let Some(sol) = &s.3 {
            if (s.1 - rho).abs() <= TANGENCY_TOL * s.1 {
                out.push(NormalizedSolution {
                    omega: sol.omega,
                    solution: sol.clone(),
                    tangency: true,
                });
                used[j] = true;
            }
        }
    }
    for j in 0..samples.len() - 1 {
        if used[j] || used[j + 1] {
            continue;
        }
        let (a, b) = (&samples[j], &samples[j + 1]);
        if (a.1 - rho) * (b.1 - rho) > 0.0 {
            continue;
        }
        if a.1 == rho && j > 0 {
            // counted with the previous interval
            continue;
        }
        let mut center = a.2;
        let mut last: Option<RadialSolution> = None;
        let g = |lambda: f64| -> f64 {
            match shooter.shoot_from(-lambda, center) {
                Ok(s) => {
                    center = s.center_value;
                    let v = s.rho - rho;
                    last = Some(s);
                    v
                }
                Err(_) => f64::NAN,
            }
        };
        let tol = 1e-14 * a.0.abs().max(b.0.abs()).max(1e-300);
        if let Some(lambda) = brent(g, a.0, b.0, tol, 200) {
            let sol = match &last {
                Some(s) if (s.omega + lambda).abs() <= tol => Some(s.clone()),
                _ => shooter.shoot_from(-lambda, center).ok(),
            };
            if let Some(sol) = sol {
                out.push(NormalizedSolution {
                    omega: sol.omega,
                    solution: sol,
                    tangency: false,
                });
            }
        }
    }
    out.sort_by(|x, y| x.omega.total_cmp(&y.omega));
    out
}

/// Fixed-frequency uniqueness is known, so branch counts are exact.
pub fn count_is_exact(spec: &ProblemSpec) -> bool {
    spec.is_brezis_nirenberg()
}

/// Supremum of the mass over positive solutions in the multiplier window.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MassSupremum {
    pub rho_sup: f64,
    pub omega_at_sup: f64,
    /// Swept `ω` window `(-λ₁, ω_up]`.
    pub window: (f64, f64),
    pub samples: usize,
    /// Samples with a solution.
    pub solved: usize,
    /// Largest `ω - bound(ρ)` over the solved samples (nonpositive when
    /// every solution obeys the window).
    pub window_excess: f64,
    pub solution: RadialSolution,
}

/// Ground states at `samples` uniform `ω` in `(lo, hi]`, each seeded by
/// the previous center value.
fn sweep_omega(shooter: &Shooter, lo: f64, hi: f64, samples: usize) -> Vec<RadialSolution> {
    let mut out: Vec<RadialSolution> = Vec::new();
    let mut seed: Option<f64> = None;
    for k in 1..=samples {
        let omega = lo + (hi - lo) * k as f64 / samples as f64;
        let sol = match seed {
            Some(a) => shooter.shoot_from(omega, a),
            None => shooter.shoot_ground_state(omega),
        };
        match sol {
            Ok(s) => {
                seed = Some(s.center_value);
                out.push(s);
            }
            Err(_) => seed = None,
        }
    }
    out
}

/// `sup ρ(ω)` over ground states with `-λ₁ < ω ≤ N(1/p - 1/q)μ|Ω|^{(2-p)/2}ρ^{(p-2)/2}`.
///
/// For `p = 2` the upper end is mass free. For `p < 2` it grows as `ρ → 0`,
/// so the sweep is cut at the bound for a mass floor `ρ_f` taken from a
/// first pass; every solution with `ρ ≥ ρ_f` lies inside. The sampled
/// maximum is refined by golden section on re-shot `ρ(ω)`.
pub fn mass_supremum_probe(spec: &ProblemSpec, samples: usize) -> Result<MassSupremum, BranchError> {
    let n = spec.dimension;
    if !(in_multiplier_regime(spec) && spec.q >= 2.0 && spec.q >= critical_exponent(n).max(3.0) * (1.0 - 1e-12)) {
        return Err(ParamError::OutOfRange {
            name: "p",
            value: spec.p,
            range: "mu > 0, 1 < p <= 2 <= q, q >= max(2*, 3)".into(),
        }
        .into());
    }
    let shooter = Shooter::new(*spec);
    let l1 = lambda1(n, spec.radius);
    let lo = -l1;
    let hi = if spec.p == 2.0 {
        multiplier_upper_bound(spec, 1.0)
    } else {
        // first pass up to the bound at the mass of a reference solution
        let floor = sweep_omega(&shooter, lo, 0.0, 50.min(samples).max(8))
            .iter()
            .map(|s| s.rho)
            .fold(0.0, f64::max);
        if !(floor > 0.0) {
            return Err(BranchError::EmptyBranch { lo, hi: 0.0 });
        }
        multiplier_upper_bound(spec, floor).max(0.0)
    };
    let sols = sweep_omega(&shooter, lo, hi, samples);
    if sols.is_empty() {
        return Err(BranchError::EmptyBranch { lo, hi });
    }
    let i = sols
        .iter()
        .enumerate()
        .fold(0, |bi, (k, s)| if s.rho > sols[bi].rho { k } else { bi });
    let step = (hi - lo) / samples as f64;
    let (a, b) = (
        (sols[i].omega - step).max(lo + 1e-12 * l1),
        (sols[i].omega + step).min(hi),
    );
    let mut best = sols[i].clone();
    let mut center = best.center_value;
    golden_max(
        |omega| match shooter.shoot_from(omega, center) {
            Ok(s) => {
                center = s.center_value;
                let v = s.rho;
                if v > best.rho {
                    best = s;
                }
                v
            }
            Err(_) => f64::NEG_INFINITY,
        },
        a,
        b,
        1e-9 * (b - a),
        200,
    );
    let window_excess = sols
        .iter()
        .map(|s| s.omega - multiplier_upper_bound(spec, s.rho))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MassSupremum {
        rho_sup: best.rho,
        omega_at_sup: best.omega,
        window: (lo, hi),
        samples,
        solved: sols.len(),
        window_excess,
        solution: best,
    })
}
