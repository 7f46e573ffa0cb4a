//! Certificates for computed solutions: Pohozaev and Nehari residuals,
//! multiplier window, boundary-strip localization, the first-eigenfunction
//! test, bubble asymptotics and energy level bounds.

use alloc::vec::Vec;

#[allow(unused_imports)] // std builds resolve the inherent methods first
use num_traits::Float;

use crate::constants::{lambda1, sobolev_constant, FirstEigenpair};
use crate::error::ParamError;
use crate::pass::{bubble_norms, implied_upper_constant, lower_level_bound, upper_level_bound, Cutoff};
use crate::problem::{critical_exponent, sphere_area, ProblemSpec};
use crate::quad::{linear_fit, simpson, GaussLegendre};
use crate::shooter::RadialSolution;
use crate::varflow::{Field, Mesh};

fn relative(terms: &[f64], defect: f64) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        defect.abs()
    } else {
        defect.abs() / scale
    }
}

/// Integral data entering both identities.
#[derive(Debug, Clone, Copy)]
struct Identity {
    n: f64,
    omega: f64,
    eta: f64,
    rho: f64,
    grad: f64,
    /// `∫F(u)`.
    big_f: f64,
    /// `∫f(u)u`.
    fu: f64,
    /// `½u'(R)² R^N |S^{N-1}|`.
    boundary: f64,
}

impl Identity {
    fn pohozaev(&self) -> f64 {
        let a = self.n * self.eta * self.big_f;
        let b = self.n * self.omega * self.rho / 2.0;
        let c = (self.n - 2.0) / 2.0 * self.grad;
        relative(&[self.boundary, a, b, c], self.boundary - (a - b - c))
    }

    fn nehari(&self) -> f64 {
        let b = self.omega * self.rho;
        let c = self.eta * self.fu;
        relative(&[self.grad, b, c], self.grad + b - c)
    }
}

fn identity_of(sol: &RadialSolution) -> Identity {
    let spec = &sol.spec;
    let n = spec.n();
    let lower = if spec.mu != 0.0 { spec.mu * sol.lp_norm } else { 0.0 };
    Identity {
        n,
        omega: sol.omega,
        eta: spec.eta,
        rho: sol.rho,
        grad: sol.grad_norm_sq,
        big_f: lower / spec.p + sol.lq_norm / spec.q,
        fu: lower + sol.lq_norm,
        boundary: 0.5 * sol.boundary_slope.powi(2) * spec.radius.powf(n) * sphere_area(spec.dimension),
    }
}

fn identity_of_field(u: &Field, omega: f64, spec: &ProblemSpec) -> Identity {
    let mesh = u.mesh();
    let v = u.values();
    let len = v.len();
    let slope = (v[len - 2] - 4.0 * v[len - 1]) / (2.0 * mesh.h);
    let n = spec.n();
    Identity {
        n,
        omega,
        eta: spec.eta,
        rho: u.mass(),
        grad: u.grad_norm_sq(),
        big_f: mesh.integrate(v, |x| spec.big_f(x)),
        fu: mesh.integrate(v, |x| spec.f(x) * x),
        boundary: 0.5 * slope * slope * mesh.radius.powf(n) * sphere_area(spec.dimension),
    }
}

/// Relative residual of
/// `½u'(R)² R^N |S^{N-1}| = N[η∫F(u) - ωρ/2] - (N-2)/2 ‖∇u‖₂²`.
pub fn pohozaev_residual(sol: &RadialSolution) -> f64 {
    identity_of(sol).pohozaev()
}

/// Relative residual of `‖∇u‖₂² + ωρ = η∫f(u)u`.
pub fn nehari_residual(sol: &RadialSolution) -> f64 {
    identity_of(sol).nehari()
}

/// `(pohozaev, nehari)` residuals of a mesh field with multiplier `ω`; the
/// boundary slope is the second-order one-sided difference.
pub fn field_residuals(u: &Field, omega: f64, spec: &ProblemSpec) -> (f64, f64) {
    let id = identity_of_field(u, omega, spec);
    (id.pohozaev(), id.nehari())
}

/// Residuals of a solution sampled on meshes with `n`, `2n`, `4n`
/// intervals, and the observed orders.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualConvergence {
    pub intervals: [usize; 3],
    pub pohozaev: [f64; 3],
    pub nehari: [f64; 3],
    pub pohozaev_order: f64,
    pub nehari_order: f64,
}

fn order(e: &[f64; 3]) -> f64 {
    0.5 * ((e[0] / e[1]).log2() + (e[1] / e[2]).log2())
}

pub fn residual_convergence(sol: &RadialSolution, n: usize) -> Result<ResidualConvergence, ParamError> {
    let mut poh = [0.0; 3];
    let mut neh = [0.0; 3];
    let intervals = [n, 2 * n, 4 * n];
    for (k, &m) in intervals.iter().enumerate() {
        let mesh = alloc::sync::Arc::new(Mesh::new(sol.spec.dimension, sol.spec.radius, m)?);
        let u = Field::from_profile(mesh, &sol.profile);
        let (p, q) = field_residuals(&u, sol.omega, &sol.spec);
        poh[k] = p;
        neh[k] = q;
    }
    Ok(ResidualConvergence {
        intervals,
        pohozaev_order: order(&poh),
        nehari_order: order(&neh),
        pohozaev: poh,
        nehari: neh,
    })
}

/// `N(1/p - 1/q)μ|Ω|^{(2-p)/2} ρ^{(p-2)/2}`.
pub fn multiplier_upper_bound(spec: &ProblemSpec, rho: f64) -> f64 {
    spec.n() * (1.0 / spec.p - 1.0 / spec.q) * spec.mu * spec.ball_volume().powf((2.0 - spec.p) / 2.0) * rho.powf((spec.p - 2.0) / 2.0)
}

/// `μ > 0`, `1 < p ≤ 2`, `q ≥ 2*`.
pub fn in_multiplier_regime(spec: &ProblemSpec) -> bool {
    spec.mu > 0.0 && spec.p > 1.0 && spec.p <= 2.0 && spec.dimension >= 3 && spec.q >= critical_exponent(spec.dimension) * (1.0 - 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultiplierWindow {
    /// `ω + λ₁`.
    pub lower_margin: f64,
    /// Upper bound for `ω`, only in the regime where it is proven.
    pub upper_bound: Option<f64>,
    pub pass: bool,
}

pub fn multiplier_window(sol: &RadialSolution) -> MultiplierWindow {
    let lower_margin = sol.omega + lambda1(sol.spec.dimension, sol.spec.radius);
    let upper_bound = in_multiplier_regime(&sol.spec).then(|| multiplier_upper_bound(&sol.spec, sol.rho));
    let pass = lower_margin > 0.0 && upper_bound.map_or(true, |b| sol.omega <= b + 1e-8);
    MultiplierWindow {
        lower_margin,
        upper_bound,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Localization {
    /// `max u'` on the profile grid.
    pub max_slope: f64,
    pub strip: f64,
    /// `∫_{Ω_r} u² / ∫_{Ω_{2r}∖Ω_r} u²`.
    pub ratio: f64,
    /// `|Ω_r| / |Ω_{2r}∖Ω_r|`, which bounds the ratio for decreasing `u`.
    pub constant: f64,
    /// `∫_{Ω_r} u² / ρ`.
    pub strip_fraction: f64,
}

fn shell_mass(sol: &RadialSolution, a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::new(8);
    let mut breaks: Vec<f64> = sol.profile.r.iter().copied().filter(|&r| r > a && r < b).collect();
    breaks.insert(0, a);
    breaks.push(b);
    let k = sol.spec.dimension as i32 - 1;
    sphere_area(sol.spec.dimension) * gl.integrate_panels(|r| sol.eval(r).powi(2) * r.powi(k), &breaks)
}

/// Monotonicity and boundary-strip mass of a radial solution, with strip
/// width `r < R/2`.
pub fn monotonicity_and_localization(sol: &RadialSolution, r: f64) -> Result<Localization, ParamError> {
    let big_r = sol.spec.radius;
    if !(r > 0.0 && 2.0 * r < big_r) {
        return Err(ParamError::OutOfRange {
            name: "strip width",
            value: r,
            range: alloc::format!("(0, {})", big_r / 2.0),
        });
    }
    let n = sol.spec.dimension as i32;
    let outer = shell_mass(sol, big_r - r, big_r);
    let inner = shell_mass(sol, big_r - 2.0 * r, big_r - r);
    let vol = |x: f64| x.powi(n);
    Ok(Localization {
        max_slope: sol.max_slope(),
        strip: r,
        ratio: outer / inner,
        constant: (vol(big_r) - vol(big_r - r)) / (vol(big_r - r) - vol(big_r - 2.0 * r)),
        strip_fraction: outer / sol.rho,
    })
}

/// `(∫u^{q-1}φ₁, ∫uφ₁)` on the solution grid.
fn eigen_moments(sol: &RadialSolution) -> (f64, f64) {
    let pair = FirstEigenpair::new(sol.spec.dimension, sol.spec.radius);
    let phi = pair.sample(&sol.profile.r);
    let k = sol.spec.dimension as i32 - 1;
    let p = &sol.profile;
    let n = p.r.len() - 1;
    let weight = |i: usize| p.r[i].powi(k) * p.jac[i] * phi[i].0;
    let top: Vec<f64> = (0..=n).map(|i| p.u[i].abs().powf(sol.spec.q - 1.0) * weight(i)).collect();
    let bottom: Vec<f64> = (0..=n).map(|i| p.u[i] * weight(i)).collect();
    let h = 1.0 / n as f64;
    (simpson(&top, h), simpson(&bottom, h))
}

/// `∫u^{q-1}φ₁ / ∫uφ₁`.
pub fn eigen_ratio(sol: &RadialSolution) -> f64 {
    let (a, b) = eigen_moments(sol);
    a / b
}

/// `λ₁ + ω - η∫u^{q-1}φ₁/∫uφ₁`, nonnegative for positive solutions when
/// `μ ≥ 0`.
pub fn eigen_test_bound(sol: &RadialSolution) -> f64 {
    let l1 = lambda1(sol.spec.dimension, sol.spec.radius);
    let ratio = if sol.spec.eta == 0.0 { 0.0 } else { eigen_ratio(sol) };
    l1 + sol.omega - sol.spec.eta * ratio
}

/// Log–log slopes of the cutoff-bubble norms against `ε`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BubbleFit {
    pub dimension: u32,
    pub eps: Vec<f64>,
    /// Slope and rms residual of `|‖∇U_ε‖₂² - S^{N/2}|`.
    pub grad_slope: f64,
    pub grad_rms: f64,
    /// Slope and rms residual of `|S^{N/2} - ‖U_ε‖_{2*}^{2*}|`.
    pub crit_slope: f64,
    pub crit_rms: f64,
    /// Slope and rms residual of `‖U_ε‖₂²`.
    pub mass_slope: f64,
    pub mass_rms: f64,
    /// rms log-residual of the one-constant fits `cε²|ln ε|` and `cε²`.
    pub log_model_rms: f64,
    pub power_model_rms: f64,
}

fn rms_about_mean(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn bubble_asymptotics_fit(dimension: u32, eps: &[f64], radius: f64, cutoff: &Cutoff) -> Result<BubbleFit, ParamError> {
    if eps.len() < 4 {
        return Err(ParamError::OutOfRange {
            name: "eps samples",
            value: eps.len() as f64,
            range: "[4, ∞)".into(),
        });
    }
    let level = sobolev_constant(dimension)?.powf(dimension as f64 / 2.0);
    let norms = eps
        .iter()
        .map(|&e| bubble_norms(dimension, radius, e, cutoff))
        .collect::<Result<Vec<_>, _>>()?;
    let le: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let fit = |ys: Vec<f64>| {
        let (_, b, rms) = linear_fit(&le, &ys);
        (b, rms)
    };
    let (grad_slope, grad_rms) = fit(norms.iter().map(|b| (b.grad - level).abs().ln()).collect());
    let (crit_slope, crit_rms) = fit(norms.iter().map(|b| (level - b.crit).abs().ln()).collect());
    let (mass_slope, mass_rms) = fit(norms.iter().map(|b| b.mass.ln()).collect());
    let log_model: Vec<f64> = norms
        .iter()
        .map(|b| (b.mass / (b.eps * b.eps * b.eps.ln().abs())).ln())
        .collect();
    let power_model: Vec<f64> = norms.iter().map(|b| (b.mass / (b.eps * b.eps)).ln()).collect();
    Ok(BubbleFit {
        dimension,
        eps: eps.to_vec(),
        grad_slope,
        grad_rms,
        crit_slope,
        crit_rms,
        mass_slope,
        mass_rms,
        log_model_rms: rms_about_mean(&log_model),
        power_model_rms: rms_about_mean(&power_model),
    })
}

/// Energy sandwich for a mountain-pass critical point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelBounds {
    pub energy: f64,
    pub lower: f64,
    /// Upper bound with `C = 0` in the remainder.
    pub upper_base: f64,
    /// Smallest remainder constant making the upper bound hold.
    pub implied_constant: f64,
    /// Slack `δ` used in the lower bound.
    pub delta: f64,
    pub pass: bool,
}

pub fn level_bounds(spec: &ProblemSpec, rho: f64, energy: f64, delta: f64) -> Result<LevelBounds, ParamError> {
    let lower = lower_level_bound(spec, rho, delta);
    let upper_base = upper_level_bound(spec, rho, 0.0)?;
    let implied_constant = implied_upper_constant(spec, rho, energy)?;
    Ok(LevelBounds {
        energy,
        lower,
        upper_base,
        implied_constant,
        delta,
        pass: energy >= lower && implied_constant.is_finite(),
    })
}

/// All certificates for one solution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerificationReport {
    pub pohozaev_residual: f64,
    pub nehari_residual: f64,
    pub multiplier_window: MultiplierWindow,
    pub monotone: bool,
    pub localization: Localization,
    pub eigen_test_bound: f64,
    pub level_bounds: Option<LevelBounds>,
}

/// Residual threshold applied by [`VerificationReport::pass`].
pub const RESIDUAL_TOL: f64 = 1e-6;

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.pohozaev_residual <= RESIDUAL_TOL
            && self.nehari_residual <= RESIDUAL_TOL
            && self.multiplier_window.pass
            && self.monotone
            && self.level_bounds.map_or(true, |l| l.pass)
    }
}

/// Certificates for a radial solution with strip width `R/10`.
pub fn verify_solution(sol: &RadialSolution) -> VerificationReport {
    let localization = monotonicity_and_localization(sol, sol.spec.radius / 10.0).expect("strip width R/10 is admissible");
    VerificationReport {
        pohozaev_residual: pohozaev_residual(sol),
        nehari_residual: nehari_residual(sol),
        multiplier_window: multiplier_window(sol),
        monotone: localization.max_slope <= 1e-10,
        localization,
        eigen_test_bound: eigen_test_bound(sol),
        level_bounds: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooter::shoot_ground_state;
    use core::f64::consts::PI;

    #[test]
    fn ground_state_identities_hold() {
        let spec = ProblemSpec::critical(4, 1.0).unwrap();
        let sol = shoot_ground_state(-0.5 * lambda1(4, 1.0), &spec).unwrap();
        assert!(pohozaev_residual(&sol) < 1e-6);
        assert!(nehari_residual(&sol) < 1e-8);
        assert!(multiplier_window(&sol).pass);
        assert!(eigen_test_bound(&sol) > -1e-8);
    }

    #[test]
    fn scaled_solution_breaks_nehari() {
        let spec = ProblemSpec::critical(3, 1.0).unwrap();
        let mut sol = shoot_ground_state(-0.5 * PI * PI, &spec).unwrap();
        let s = 1.01f64;
        sol.rho *= s * s;
        sol.grad_norm_sq *= s * s;
        sol.lq_norm *= s.powf(6.0);
        assert!(nehari_residual(&sol) > 1e-3);
    }

    #[test]
    fn strip_witness_is_volume_ratio() {
        let spec = ProblemSpec::critical(3, 1.0).unwrap();
        let sol = shoot_ground_state(-0.6 * PI * PI, &spec).unwrap();
        let loc = monotonicity_and_localization(&sol, 0.1).unwrap();
        let expect = (1.0 - 0.9f64.powi(3)) / (0.9f64.powi(3) - 0.8f64.powi(3));
        assert!((loc.constant - expect).abs() < 1e-14);
        assert!(loc.ratio < loc.constant);
        assert!(loc.max_slope <= 1e-10);
    }

    #[test]
    fn p_two_upper_bound_is_mass_free() {
        let spec = ProblemSpec::new(3, 1.0, 1.0, 2.0, 6.0).unwrap();
        for rho in [0.1, 1.0, 7.0] {
            assert!((multiplier_upper_bound(&spec, rho) - 1.0).abs() < 1e-14);
        }
    }
}
