//! Finite-volume radial discretization and mass-constrained gradient flows.
//!
//! Unknowns live at `r_i = i h`, `i = 0..n-1`, with `u_n = 0` at the wall.
//! Node `i` owns the dual cell `[r_i - h/2, r_i + h/2] ∩ [0, R]`, so the
//! discrete inner product is `Σ w_i u_i v_i` and the Dirichlet form is
//! `Σ s_i (u_{i+1} - u_i)²` with face coefficients `s_i = A r_{i+1/2}^{N-1}/h`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // std builds resolve the inherent methods first
use num_traits::Float;

use crate::constants::{gn_gamma, lambda1, sobolev_constant};
use crate::error::{FlowError, ParamError, ShootError};
use crate::problem::{critical_exponent, sphere_area, ProblemSpec};
use crate::shooter::{Profile, RadialSolution, Shooter};
use crate::tridiag::SymTridiag;

/// Uniform radial mesh on `[0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dimension: u32,
    pub radius: f64,
    pub h: f64,
    /// Nodes `r_0 = 0, …, r_{n-1} = R - h`.
    pub r: Vec<f64>,
    /// Dual-cell volumes.
    pub w: Vec<f64>,
    /// Face coefficients; `s[i]` couples `i` and `i + 1`.
    pub s: Vec<f64>,
}

impl Mesh {
    pub fn new(dimension: u32, radius: f64, intervals: usize) -> Result<Self, ParamError> {
        if dimension == 0 {
            return Err(ParamError::Dimension { min: 1, got: 0 });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(ParamError::Radius(radius));
        }
        if intervals < 4 {
            return Err(ParamError::OutOfRange {
                name: "intervals",
                value: intervals as f64,
                range: "[4, ∞)".into(),
            });
        }
        let n = intervals;
        let h = radius / n as f64;
        let area = sphere_area(dimension);
        let dn = dimension as f64;
        let k = dimension as i32;
        let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let w = r
            .iter()
            .map(|&ri| {
                let lo = (ri - 0.5 * h).max(0.0);
                area / dn * ((ri + 0.5 * h).powi(k) - lo.powi(k))
            })
            .collect();
        let s = (0..n)
            .map(|i| area * ((i as f64 + 0.5) * h).powi(k - 1) / h)
            .collect();
        Ok(Self {
            dimension,
            radius,
            h,
            r,
            w,
            s,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Stiffness matrix `K` with `uᵀKu = Σ s_i (u_{i+1} - u_i)²`.
    pub fn stiffness(&self) -> SymTridiag {
        let n = self.len();
        let diag = (0..n)
            .map(|i| self.s[i] + if i > 0 { self.s[i - 1] } else { 0.0 })
            .collect();
        let off = self.s[..n - 1].iter().map(|v| -v).collect();
        SymTridiag::new(diag, off)
    }

    /// `Σ s_i (u_{i+1} - u_i)²`.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let next = if i + 1 < n { u[i + 1] } else { 0.0 };
                self.s[i] * (next - u[i]) * (next - u[i])
            })
            .sum()
    }

    /// `Σ w_i g(u_i)`.
    pub fn integrate<G: Fn(f64) -> f64>(&self, u: &[f64], g: G) -> f64 {
        self.w.iter().zip(u).map(|(w, &v)| w * g(v)).sum()
    }

    pub fn sample<G: Fn(f64) -> f64>(self: &Arc<Self>, g: G) -> Field {
        Field::new(self.clone(), self.r.iter().map(|&r| g(r)).collect())
    }
}

/// Nodal values on a shared mesh with cached mass and Dirichlet energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    mass: f64,
    grad_norm_sq: f64,
}

impl Field {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.len());
        let mut f = Self {
            mesh,
            values,
            mass: 0.0,
            grad_norm_sq: 0.0,
        };
        f.refresh();
        f
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.len();
        Self::new(mesh, vec![0.0; n])
    }

    /// Hermite-interpolated shooter profile.
    pub fn from_profile(mesh: Arc<Mesh>, profile: &Profile) -> Self {
        let values = mesh.r.iter().map(|&r| profile.eval(r)).collect();
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `‖u‖₂²`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `‖∇u‖₂²`.
    pub fn grad_norm_sq(&self) -> f64 {
        self.grad_norm_sq
    }

    pub fn set_values(&mut self, values: Vec<f64>) {
        assert_eq!(values.len(), self.mesh.len());
        self.values = values;
        self.refresh();
    }

    pub fn update<M: FnOnce(&mut [f64])>(&mut self, m: M) {
        m(&mut self.values);
        self.refresh();
    }

    /// Rescales to `‖u‖₂² = rho`.
    pub fn rescale_to(&mut self, rho: f64) {
        let c = (rho / self.mass).sqrt();
        for v in &mut self.values {
            *v *= c;
        }
        self.refresh();
        // one correction pass removes the rounding of the first product
        let c = (rho / self.mass).sqrt();
        if c != 1.0 {
            for v in &mut self.values {
                *v *= c;
            }
            self.refresh();
        }
    }

    /// Piecewise-linear transfer to another mesh of the same ball, with
    /// `u(R) = 0`.
    pub fn transfer(&self, mesh: &Arc<Mesh>) -> Field {
        let from = &self.mesh;
        let n = from.len();
        let vals = mesh
            .r
            .iter()
            .map(|&r| {
                let x = r / from.h;
                let i = (x.floor() as usize).min(n - 1);
                let t = x - i as f64;
                let next = if i + 1 < n { self.values[i + 1] } else { 0.0 };
                self.values[i] + t * (next - self.values[i])
            })
            .collect();
        Field::new(mesh.clone(), vals)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Weighted inner product `Σ w_i u_i v_i`.
    pub fn dot(&self, other: &[f64]) -> f64 {
        self.mesh
            .w
            .iter()
            .zip(&self.values)
            .zip(other)
            .map(|((w, a), b)| w * a * b)
            .sum()
    }

    /// `Σ w_i |u_i|^s`.
    pub fn lebesgue(&self, s: f64) -> f64 {
        self.mesh.integrate(&self.values, |v| v.abs().powf(s))
    }

    fn refresh(&mut self) {
        self.mass = self.mesh.integrate(&self.values, |v| v * v);
        self.grad_norm_sq = self.mesh.dirichlet(&self.values);
    }
}

/// Energy of the form `½‖∇u‖₂² - P(u)` on a mass sphere.
pub trait FlowObjective {
    /// `P(u)`.
    fn potential(&self, u: &Field) -> f64;
    /// Nodal `g` with `∂P/∂u_i = w_i g_i`.
    fn force(&self, u: &Field) -> Vec<f64>;

    fn energy(&self, u: &Field) -> f64 {
        0.5 * u.grad_norm_sq() - self.potential(u)
    }
}

/// `I_η(u) = ½‖∇u‖₂² - η∫F(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy(pub ProblemSpec);

impl FlowObjective for Energy {
    fn potential(&self, u: &Field) -> f64 {
        let spec = &self.0;
        spec.eta * u.mesh().integrate(u.values(), |v| spec.big_f(v))
    }

    fn force(&self, u: &Field) -> Vec<f64> {
        let spec = &self.0;
        u.values().iter().map(|&v| spec.eta * spec.f(v)).collect()
    }
}

/// `½J_ε(u) = ½‖∇u‖₂² - (ε/2)‖u‖_{2*}²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaFunctional {
    pub eps: f64,
    pub crit: f64,
}

impl ThetaFunctional {
    pub fn new(dimension: u32, eps: f64) -> Result<Self, ParamError> {
        if dimension < 3 {
            return Err(ParamError::Dimension {
                min: 3,
                got: dimension,
            });
        }
        Ok(Self {
            eps,
            crit: critical_exponent(dimension),
        })
    }
}

impl FlowObjective for ThetaFunctional {
    fn potential(&self, u: &Field) -> f64 {
        0.5 * self.eps * u.lebesgue(self.crit).powf(2.0 / self.crit)
    }

    fn force(&self, u: &Field) -> Vec<f64> {
        let s = self.crit;
        let c = self.eps * u.lebesgue(s).powf(2.0 / s - 1.0);
        u.values()
            .iter()
            .map(|&v| c * v.abs().powf(s - 2.0) * v)
            .collect()
    }
}

/// `I_η` of a field.
pub fn discrete_energy(u: &Field, spec: &ProblemSpec) -> f64 {
    Energy(*spec).energy(u)
}

/// Euclidean-coordinate gradient `Ku - Wg` of the objective.
pub fn energy_gradient<O: FlowObjective + ?Sized>(objective: &O, u: &Field) -> Vec<f64> {
    let ku = u.mesh().stiffness().mul(u.values());
    let g = objective.force(u);
    ku.iter()
        .zip(&g)
        .zip(&u.mesh().w)
        .map(|((k, g), w)| k - w * g)
        .collect()
}

/// Multiplier `ω = (Σ w g u - ‖∇u‖²)/ρ` and the projected residual
/// `‖W⁻¹(Ku - Wg) + ωu‖_W / √ρ`.
pub fn stationarity<O: FlowObjective + ?Sized>(objective: &O, u: &Field) -> (f64, f64) {
    let g = objective.force(u);
    let rho = u.mass();
    let omega = (u.dot(&g) - u.grad_norm_sq()) / rho;
    let ku = u.mesh().stiffness().mul(u.values());
    let mesh = u.mesh();
    let norm: f64 = (0..mesh.len())
        .map(|i| {
            let r = ku[i] / mesh.w[i] - g[i] + omega * u.values()[i];
            mesh.w[i] * r * r
        })
        .sum();
    (omega, (norm / rho).sqrt())
}

/// Rounding level of the residual in [`stationarity`],
/// `ε‖W⁻¹|K||u|‖_W / √ρ`; the small weights near the origin make it grow
/// like `h⁻²`.
pub fn residual_floor(u: &Field) -> f64 {
    let mesh = u.mesh();
    let k = mesh.stiffness();
    let v = u.values();
    let n = v.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let mut a = (k.diag[i] * v[i]).abs();
            if i > 0 {
                a += (k.off[i - 1] * v[i - 1]).abs();
            }
            if i + 1 < n {
                a += (k.off[i] * v[i + 1]).abs();
            }
            a * a / mesh.w[i]
        })
        .sum();
    f64::EPSILON * (sum / u.mass()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    /// Stop when the projected residual falls below this or below
    /// [`residual_floor`].
    pub tol: f64,
    pub max_iter: usize,
    pub tau0: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Localization level for the `A_α` report; `None` uses [`alpha_policy`].
    pub alpha: Option<f64>,
    pub require_positive: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 20_000,
            tau0: 1e-2,
            tau_min: 1e-14,
            tau_max: 1e8,
            alpha: None,
            require_positive: true,
        }
    }
}

/// Final state of a constrained flow.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub u: Field,
    pub omega: f64,
    pub iterations: usize,
    pub constrained_grad_norm: f64,
    pub energy: f64,
    pub alpha: f64,
    /// `‖∇u‖₂² < αρ`.
    pub in_alpha_interior: bool,
    /// `αρ - ‖∇u‖₂²`.
    pub alpha_margin: f64,
    /// Largest energy increase accepted within the round-off slack.
    pub max_energy_rise: f64,
}

impl FlowResult {
    /// Shooter solution with the same mass, started from the flow's
    /// frequency and center value.
    pub fn polish(&self, spec: &ProblemSpec) -> Result<RadialSolution, ShootError> {
        Shooter::new(*spec).solve_at_mass(self.u.mass(), self.omega, self.u.values()[0])
    }
}

/// Semi-implicit projected descent for `objective` on `‖u‖₂² = ρ`.
///
/// Each step solves `(W + τK)u⁺ = W(u + τ(g - ωu))` with the current
/// multiplier `ω` and rescales to mass `ρ`, so solutions are exact fixed
/// points; `τ` doubles after an accepted step and halves after a rejected one.
pub fn flow_objective<O: FlowObjective + ?Sized>(
    objective: &O,
    rho: f64,
    u0: Field,
    alpha: f64,
    config: &FlowConfig,
) -> Result<FlowResult, FlowError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(ParamError::OutOfRange {
            name: "rho",
            value: rho,
            range: "(0, ∞)".into(),
        }
        .into());
    }
    let mut u = u0;
    if !(u.mass() > 0.0) {
        return Err(ParamError::OutOfRange {
            name: "initial mass",
            value: u.mass(),
            range: "(0, ∞)".into(),
        }
        .into());
    }
    u.rescale_to(rho);
    let mesh = u.mesh().clone();
    let k = mesh.stiffness();
    let mut energy = objective.energy(&u);
    let mut tau = config.tau0;
    let mut rise = 0.0f64;
    let finish = |u: Field, iterations: usize, energy: f64, rise: f64| {
        let (omega, res) = stationarity(objective, &u);
        let grad = u.grad_norm_sq();
        FlowResult {
            omega,
            iterations,
            constrained_grad_norm: res,
            energy,
            alpha,
            in_alpha_interior: grad < alpha * rho,
            alpha_margin: alpha * rho - grad,
            max_energy_rise: rise,
            u,
        }
    };
    for it in 0..config.max_iter {
        let (_, res) = stationarity(objective, &u);
        if res <= config.tol.max(residual_floor(&u)) {
            let out = finish(u, it, energy, rise);
            return check_sign(out, config);
        }
        let g = objective.force(&u);
        let omega = (u.dot(&g) - u.grad_norm_sq()) / rho;
        loop {
            let rhs: Vec<f64> = (0..mesh.len())
                .map(|i| mesh.w[i] * (u.values()[i] + tau * (g[i] - omega * u.values()[i])))
                .collect();
            let next = k
                .shifted(1.0 / tau, &mesh.w)
                .solve(&rhs.iter().map(|v| v / tau).collect::<Vec<_>>());
            let accepted = next.and_then(|vals| {
                if !vals.iter().all(|v| v.is_finite()) {
                    return None;
                }
                let mut cand = Field::new(mesh.clone(), vals);
                if !(cand.mass() > 0.0) {
                    return None;
                }
                cand.rescale_to(rho);
                let e = objective.energy(&cand);
                // E is a difference of two large terms for concentrated states
                let slack = 1e-14 * (0.5 * cand.grad_norm_sq() + objective.potential(&cand).abs());
                (e <= energy + slack).then_some((cand, e))
            });
            match accepted {
                Some((cand, e)) => {
                    rise = rise.max(e - energy);
                    u = cand;
                    energy = e;
                    tau = (2.0 * tau).min(config.tau_max);
                    break;
                }
                None => {
                    tau *= 0.5;
                    if tau < config.tau_min {
                        let out = finish(u, it, energy, rise);
                        return Err(FlowError::EnergyStall(out.into()));
                    }
                }
            }
        }
    }
    let out = finish(u, config.max_iter, energy, rise);
    if out.constrained_grad_norm <= config.tol.max(residual_floor(&out.u)) {
        check_sign(out, config)
    } else {
        Err(FlowError::MaxIterations(out.into()))
    }
}

fn check_sign(out: FlowResult, config: &FlowConfig) -> Result<FlowResult, FlowError> {
    let min = out.u.min();
    if config.require_positive && min < -1e-12 * out.u.sup_norm() {
        Err(FlowError::NotPositive {
            min,
            last: out.into(),
        })
    } else {
        Ok(out)
    }
}

/// Local minimizer of `I_η` on the mass sphere `‖u‖₂² = ρ`, reached by the
/// projected flow from `u0`.
pub fn flow_to_minimizer(
    spec: &ProblemSpec,
    rho: f64,
    u0: Field,
    config: &FlowConfig,
) -> Result<FlowResult, FlowError> {
    let alpha = match config.alpha {
        Some(a) => a,
        None => alpha_policy(spec, u0.mesh()),
    };
    flow_objective(&Energy(*spec), rho, u0, alpha, config)
}

/// `α = max(2λ₁, 1.05‖∇U₁‖₂²/‖U₁‖₂²)` with the default cutoff bubble at
/// `ε = 1`; `2λ₁` below dimension 3.
pub fn alpha_policy(spec: &ProblemSpec, mesh: &Arc<Mesh>) -> f64 {
    let base = 2.0 * lambda1(spec.dimension, spec.radius);
    if spec.dimension < 3 {
        return base;
    }
    match crate::pass::bubble(1.0, spec, 1.0, &crate::pass::Cutoff::default(), mesh) {
        Ok(b) => base.max(1.05 * b.v.grad_norm_sq()),
        Err(_) => base,
    }
}

/// `√ρ·φ₁` sampled on the mesh and rescaled to discrete mass `ρ`.
pub fn first_mode(mesh: &Arc<Mesh>, rho: f64) -> Field {
    let pair = crate::constants::FirstEigenpair::new(mesh.dimension, mesh.radius);
    let phi: Vec<f64> = pair.sample(&mesh.r).into_iter().map(|(v, _)| v).collect();
    let mut u = Field::new(mesh.clone(), phi);
    u.rescale_to(rho);
    u
}

/// Gagliardo–Nirenberg constants `(C_{N,p}, C_{N,q})` needed by
/// [`boundary_level_lower_bound_with`], `None` where the bound uses Hölder
/// or Sobolev instead.
pub fn gn_constants(spec: &ProblemSpec) -> Result<(Option<f64>, Option<f64>), FlowError> {
    let needs = |s: f64| s > 2.0 && (spec.dimension < 3 || s < critical_exponent(spec.dimension) * (1.0 - 1e-12));
    let c = |s: f64| -> Result<Option<f64>, FlowError> {
        if needs(s) {
            gn_best_constant(spec.dimension, s, &GnConfig::default()).map(Some)
        } else {
            Ok(None)
        }
    };
    let cp = if spec.mu != 0.0 { c(spec.p)? } else { None };
    Ok((cp, c(spec.q)?))
}

/// Upper bound for `‖u‖_s^s` over `‖∇u‖₂² = αρ`, `‖u‖₂² = ρ` on the ball:
/// Gagliardo–Nirenberg for `2 < s < 2*`, Sobolev at `s = 2*`, Hölder for
/// `s ≤ 2`.
fn lebesgue_bound(spec: &ProblemSpec, s: f64, alpha: f64, rho: f64, gn: Option<f64>) -> Result<f64, FlowError> {
    let dim = spec.dimension;
    if s <= 2.0 {
        let vol = spec.ball_volume();
        return Ok(vol.powf(1.0 - s / 2.0) * rho.powf(s / 2.0));
    }
    let crit = critical_exponent(dim);
    if dim >= 3 && (s - crit).abs() <= 1e-12 * s {
        let sob = sobolev_constant(dim)?;
        return Ok(sob.powf(-crit / 2.0) * (alpha * rho).powf(crit / 2.0));
    }
    if dim >= 3 && s > crit {
        return Err(ParamError::OutOfRange {
            name: "exponent",
            value: s,
            range: "(1, 2*]".into(),
        }
        .into());
    }
    let gamma = gn_gamma(dim, s)?;
    let c = match gn {
        Some(c) => c,
        None => gn_best_constant(dim, s, &GnConfig::default())?,
    };
    Ok(c.powf(s) * alpha.powf(s * gamma / 2.0) * rho.powf(s / 2.0))
}

/// Lower bound for `I_η` on `∂A_α = {‖∇u‖₂² = αρ}`:
/// `αρ/2 - η(|μ|/p)B_p - (η/q)B_q` with `B_s` the Gagliardo–Nirenberg,
/// Sobolev or Hölder bound for `‖u‖_s^s`.
pub fn boundary_level_lower_bound(alpha: f64, rho: f64, spec: &ProblemSpec) -> Result<f64, FlowError> {
    boundary_level_lower_bound_with(alpha, rho, spec, None, None)
}

/// As [`boundary_level_lower_bound`] with precomputed `C_{N,p}`, `C_{N,q}`.
pub fn boundary_level_lower_bound_with(
    alpha: f64,
    rho: f64,
    spec: &ProblemSpec,
    gn_p: Option<f64>,
    gn_q: Option<f64>,
) -> Result<f64, FlowError> {
    let mut bound = 0.5 * alpha * rho;
    if spec.mu != 0.0 {
        bound -= spec.eta * spec.mu.abs() / spec.p * lebesgue_bound(spec, spec.p, alpha, rho, gn_p)?;
    }
    bound -= spec.eta / spec.q * lebesgue_bound(spec, spec.q, alpha, rho, gn_q)?;
    Ok(bound)
}

/// One value of `θ_ε = inf{‖∇u‖₂² - ε‖u‖_{2*}² : ‖u‖₂ = 1}`.
#[derive(Debug, Clone)]
pub struct ThetaPoint {
    pub eps: f64,
    pub theta: Result<f64, FlowError>,
}

/// `θ_ε` over `eps_grid` by the projected flow, each minimization started
/// from the previous minimizer (the first from `φ₁`).
pub fn theta_curve(eps_grid: &[f64], mesh: &Arc<Mesh>, config: &FlowConfig) -> Result<Vec<ThetaPoint>, ParamError> {
    let dim = mesh.dimension;
    let sob = sobolev_constant(dim)?;
    if let Some(&e) = eps_grid.iter().find(|&&e| !(e > 0.0 && e < sob)) {
        return Err(ParamError::OutOfRange {
            name: "eps",
            value: e,
            range: alloc::format!("(0, {sob})"),
        });
    }
    let mut start = first_mode(mesh, 1.0);
    let mut out = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let objective = ThetaFunctional::new(dim, eps)?;
        let theta = match flow_objective(&objective, 1.0, start.clone(), f64::INFINITY, config) {
            Ok(res) => {
                start = res.u.clone();
                Ok(2.0 * res.energy)
            }
            Err(e) => Err(e),
        };
        out.push(ThetaPoint { eps, theta });
    }
    Ok(out)
}

/// Settings for the Gagliardo–Nirenberg ground-state computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnConfig {
    pub radius: f64,
    pub intervals: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Largest accepted `u(R - h)/u(0)`.
    pub tail_ratio: f64,
}

impl Default for GnConfig {
    fn default() -> Self {
        Self {
            radius: 30.0,
            intervals: 6000,
            max_iter: 1000,
            tol: 1e-13,
            tail_ratio: 1e-10,
        }
    }
}

/// `‖u‖_q / (‖∇u‖₂^γ ‖u‖₂^{1-γ})`, `γ = N(q-2)/(2q)`.
pub fn gn_quotient(u: &Field, q: f64) -> Result<f64, ParamError> {
    let gamma = gn_gamma(u.mesh().dimension, q)?;
    let lq = u.lebesgue(q).powf(1.0 / q);
    Ok(lq / (u.grad_norm_sq().powf(0.5 * gamma) * u.mass().powf(0.5 * (1.0 - gamma))))
}

/// Discrete ground state of `-ΔQ + Q = Q^{q-1}` on a large ball by
/// Petviashvili iteration.
pub fn gn_ground_state(dimension: u32, q: f64, config: &GnConfig) -> Result<Field, FlowError> {
    gn_gamma(dimension, q)?;
    let mesh = Arc::new(Mesh::new(dimension, config.radius, config.intervals)?);
    let l = mesh.stiffness().shifted(1.0, &mesh.w);
    let mut u: Vec<f64> = mesh.r.iter().map(|r| (-r * r / 4.0).exp()).collect();
    let expo = (q - 1.0) / (q - 2.0);
    for _ in 0..config.max_iter {
        let nl: Vec<f64> = u
            .iter()
            .zip(&mesh.w)
            .map(|(v, w)| w * v.abs().powf(q - 2.0) * v)
            .collect();
        let lu = l.mul(&u);
        let num: f64 = u.iter().zip(&lu).map(|(a, b)| a * b).sum();
        let den: f64 = u.iter().zip(&nl).map(|(a, b)| a * b).sum();
        let m = num / den;
        let v = l.solve(&nl).ok_or(FlowError::DomainTooSmall { ratio: f64::NAN })?;
        let next: Vec<f64> = v.iter().map(|x| m.powf(expo) * x).collect();
        let diff = next
            .iter()
            .zip(&u)
            .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        let scale = next.iter().fold(0.0f64, |d, a| d.max(a.abs()));
        u = next;
        if diff <= config.tol * scale {
            break;
        }
    }
    let ratio = u[u.len() - 1].abs() / u[0].abs();
    if !(ratio <= config.tail_ratio) {
        return Err(FlowError::DomainTooSmall { ratio });
    }
    Ok(Field::new(mesh, u))
}

/// Best constant `C_{N,q}` in `‖u‖_q ≤ C ‖∇u‖₂^γ ‖u‖₂^{1-γ}`, evaluated at
/// the discrete ground state.
pub fn gn_best_constant(dimension: u32, q: f64, config: &GnConfig) -> Result<f64, FlowError> {
    let crit = critical_exponent(dimension);
    if !(q > 2.0 && q < crit) {
        return Err(ParamError::OutOfRange {
            name: "q",
            value: q,
            range: alloc::format!("(2, {crit})"),
        }
        .into());
    }
    let ground = gn_ground_state(dimension, q, config)?;
    Ok(gn_quotient(&ground, q)?)
}
