//! Mountain-pass machinery on the mass sphere: cutoff bubbles, the bubble
//! path between a spread and a concentrated endpoint, string relaxation and
//! bordered Newton refinement of the saddle.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)] // std builds resolve the inherent methods first
use num_traits::Float;

use crate::constants::{lambda1, sobolev_constant};
use crate::error::{ParamError, PassError};
use crate::problem::{sphere_area, ProblemSpec};
use crate::quad::GaussLegendre;
use crate::tridiag::solve_general;
use crate::roots::golden_max;
use crate::varflow::{
    boundary_level_lower_bound, boundary_level_lower_bound_with, discrete_energy, first_mode, flow_to_minimizer,
    gn_constants, stationarity, Energy, Field, FlowConfig, FlowResult, Mesh,
};

/// Radial cutoff `φ = 1` on `[0, r_in R]`, `0` on `[r_out R, R]`, quintic
/// smoothstep between.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cutoff {
    pub r_in: f64,
    pub r_out: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self {
            r_in: 0.5,
            r_out: 0.75,
        }
    }
}

impl Cutoff {
    pub fn validate(&self) -> Result<(), ParamError> {
        if 0.0 < self.r_in && self.r_in < self.r_out && self.r_out <= 1.0 {
            Ok(())
        } else {
            Err(ParamError::OutOfRange {
                name: "cutoff r_in",
                value: self.r_in,
                range: alloc::format!("(0, r_out = {}) with r_out <= 1", self.r_out),
            })
        }
    }

    /// `(φ(r), φ'(r))` on a ball of radius `radius`.
    pub fn eval(&self, r: f64, radius: f64) -> (f64, f64) {
        let (a, b) = (self.r_in * radius, self.r_out * radius);
        if r <= a {
            (1.0, 0.0)
        } else if r >= b {
            (0.0, 0.0)
        } else {
            let t = (r - a) / (b - a);
            let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
            let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / (b - a);
            (1.0 - s, -ds)
        }
    }
}

/// `(U_ε, U_ε')` with `U_ε = φ [N(N-2)ε²]^{(N-2)/4} / (ε² + r²)^{(N-2)/2}`.
pub fn bubble_value(dimension: u32, radius: f64, eps: f64, cutoff: &Cutoff, r: f64) -> (f64, f64) {
    let n = dimension as f64;
    let m = 0.5 * (n - 2.0);
    let c = (n * (n - 2.0) * eps * eps).powf(0.5 * m);
    let base = eps * eps + r * r;
    let u = c * base.powf(-m);
    let du = -2.0 * m * r * c * base.powf(-m - 1.0);
    let (phi, dphi) = cutoff.eval(r, radius);
    (phi * u, phi * du + dphi * u)
}

/// Cutoff bubble at scale `ε` and its mass-`ρ` normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleFamily {
    pub eps: f64,
    pub cutoff: Cutoff,
    /// `U_ε` on the mesh.
    pub profile: Field,
    /// `v_ε = √ρ U_ε / ‖U_ε‖₂`.
    pub v: Field,
}

pub fn bubble(eps: f64, spec: &ProblemSpec, rho: f64, cutoff: &Cutoff, mesh: &Arc<Mesh>) -> Result<BubbleFamily, ParamError> {
    spec.require_dimension(3)?;
    cutoff.validate()?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ParamError::OutOfRange {
            name: "eps",
            value: eps,
            range: "(0, 1]".into(),
        });
    }
    let radius = mesh.radius;
    let profile = mesh.sample(|r| bubble_value(spec.dimension, radius, eps, cutoff, r).0);
    let mut v = profile.clone();
    v.rescale_to(rho);
    Ok(BubbleFamily {
        eps,
        cutoff: *cutoff,
        profile,
        v,
    })
}

/// Continuum norms of a cutoff bubble.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BubbleNorms {
    pub eps: f64,
    /// `‖∇U_ε‖₂²`.
    pub grad: f64,
    /// `‖U_ε‖₂²`.
    pub mass: f64,
    /// `‖U_ε‖_{2*}^{2*}`.
    pub crit: f64,
}

/// Norms by Gauss–Legendre quadrature on panels graded at scale `ε`.
pub fn bubble_norms(dimension: u32, radius: f64, eps: f64, cutoff: &Cutoff) -> Result<BubbleNorms, ParamError> {
    if dimension < 3 {
        return Err(ParamError::Dimension {
            min: 3,
            got: dimension,
        });
    }
    cutoff.validate()?;
    let gl = GaussLegendre::new(20);
    let mut breaks = Vec::new();
    let mut x = 0.0;
    breaks.push(x);
    let mut step = eps / 8.0;
    while x + step < cutoff.r_in * radius {
        x += step;
        breaks.push(x);
        step *= 1.25;
    }
    breaks.push(cutoff.r_in * radius);
    for k in 1..=16 {
        breaks.push(radius * (cutoff.r_in + (cutoff.r_out - cutoff.r_in) * k as f64 / 16.0));
    }
    let area = sphere_area(dimension);
    let k = dimension as i32 - 1;
    let crit = crate::problem::critical_exponent(dimension);
    let val = |r: f64| bubble_value(dimension, radius, eps, cutoff, r);
    let grad = area * gl.integrate_panels(|r| val(r).1.powi(2) * r.powi(k), &breaks);
    let mass = area * gl.integrate_panels(|r| val(r).0.powi(2) * r.powi(k), &breaks);
    let lc = area * gl.integrate_panels(|r| val(r).0.abs().powf(crit) * r.powi(k), &breaks);
    Ok(BubbleNorms {
        eps,
        grad,
        mass,
        crit: lc,
    })
}

/// Nodes of a discrete path on the mass sphere with fixed endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub nodes: Vec<Field>,
    pub energies: Vec<f64>,
    pub max_index: usize,
    pub rho: f64,
    pub eta: f64,
    pub iterations: usize,
    /// Projected gradient norm at the max-energy node.
    pub max_node_grad: f64,
    /// Largest increase of the path maximum between iterations.
    pub max_rise: f64,
}

impl PathState {
    pub fn from_nodes(nodes: Vec<Field>, spec: &ProblemSpec, rho: f64) -> Self {
        let mut p = Self {
            nodes,
            energies: Vec::new(),
            max_index: 0,
            rho,
            eta: spec.eta,
            iterations: 0,
            max_node_grad: f64::NAN,
            max_rise: 0.0,
        };
        p.evaluate(spec);
        p
    }

    pub fn path_max(&self) -> f64 {
        self.energies[self.max_index]
    }

    fn evaluate(&mut self, spec: &ProblemSpec) {
        self.energies = self.nodes.iter().map(|u| discrete_energy(u, spec)).collect();
        self.max_index = argmax(&self.energies);
        self.max_node_grad = stationarity(&Energy(*spec), &self.nodes[self.max_index]).1;
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Endpoint data of the bubble path.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub alpha: f64,
    pub eps0: f64,
    pub near_energy: f64,
    pub far_energy: f64,
    pub boundary_bound: f64,
}

/// `I_η(v_ε)` and `‖∇v_ε‖₂² / ρ` on the mesh.
fn bubble_state(eps: f64, spec: &ProblemSpec, rho: f64, cutoff: &Cutoff, mesh: &Arc<Mesh>) -> Result<(Field, f64, f64), ParamError> {
    let b = bubble(eps, spec, rho, cutoff, mesh)?;
    let e = discrete_energy(&b.v, spec);
    let q = b.v.grad_norm_sq() / rho;
    Ok((b.v, e, q))
}

/// Largest `ε = 2^{-k}` with `v_ε ∉ A_α` and `I_η(v_ε)` below the boundary
/// bound, limited by mesh resolution (`ε ≥ 4h`).
pub fn choose_eps0(spec: &ProblemSpec, rho: f64, alpha: f64, cutoff: &Cutoff, mesh: &Arc<Mesh>) -> Result<f64, PassError> {
    let bound = boundary_level_lower_bound(alpha, rho, spec)?;
    let mut eps = 1.0;
    while eps >= 4.0 * mesh.h {
        let (_, e, q) = bubble_state(eps, spec, rho, cutoff, mesh)?;
        if q > alpha && e < bound {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Err(PassError::NoFarEndpoint)
}

/// The bubble path `{v_ε : ε₀ ≤ ε ≤ 1}` at `m` nodes geometric in `ε`
/// (uniform `t` in `ε = ε₀^t`), with the endpoint check
/// `v₁ ∈ A_α`, `v_{ε₀} ∉ A_α`, `max{I(v₁), I(v_{ε₀})} < inf_{∂A_α} I`.
pub fn initial_path(
    eps0: f64,
    m: usize,
    spec: &ProblemSpec,
    rho: f64,
    alpha: f64,
    cutoff: &Cutoff,
    mesh: &Arc<Mesh>,
) -> Result<(PathState, Geometry), PassError> {
    initial_path_from(None, eps0, m, spec, rho, alpha, cutoff, mesh)
}

/// As [`initial_path`], optionally prefixed by a straight segment (projected
/// onto the sphere) from `near` to `v₁` over the first quarter of the nodes;
/// the endpoint check then applies to `near`.
#[allow(clippy::too_many_arguments)]
pub fn initial_path_from(
    near: Option<&Field>,
    eps0: f64,
    m: usize,
    spec: &ProblemSpec,
    rho: f64,
    alpha: f64,
    cutoff: &Cutoff,
    mesh: &Arc<Mesh>,
) -> Result<(PathState, Geometry), PassError> {
    let m = m.max(3);
    let bound = boundary_level_lower_bound(alpha, rho, spec)?;
    let lead = if near.is_some() { (m - 1) / 4 } else { 0 };
    let v1 = bubble(1.0, spec, rho, cutoff, mesh)?.v;
    let mut nodes = Vec::with_capacity(m);
    if let Some(a) = near {
        for j in 0..lead {
            let t = j as f64 / lead as f64;
            let vals = a.values().iter().zip(v1.values()).map(|(x, y)| (1.0 - t) * x + t * y).collect();
            let mut u = Field::new(mesh.clone(), vals);
            u.rescale_to(rho);
            nodes.push(u);
        }
    }
    let rest = m - lead;
    for j in 0..rest {
        let t = j as f64 / (rest - 1) as f64;
        nodes.push(bubble(eps0.powf(t), spec, rho, cutoff, mesh)?.v);
    }
    let path = PathState::from_nodes(nodes, spec, rho);
    let geometry = Geometry {
        alpha,
        eps0,
        near_energy: path.energies[0],
        far_energy: path.energies[m - 1],
        boundary_bound: bound,
    };
    let near_inside = path.nodes[0].grad_norm_sq() < alpha * rho;
    let far_outside = path.nodes[m - 1].grad_norm_sq() > alpha * rho;
    if !(near_inside && far_outside && geometry.near_energy.max(geometry.far_energy) < bound) {
        return Err(PassError::GeometryFail {
            near_energy: geometry.near_energy,
            far_energy: geometry.far_energy,
            boundary_bound: bound,
        });
    }
    Ok((path, geometry))
}

/// α maximizing `inf_{∂A_α} I_η - I_η(near)` over `α > ‖∇near‖₂²/ρ`.
pub fn choose_alpha(spec: &ProblemSpec, rho: f64, near: &Field) -> Result<f64, PassError> {
    let (cp, cq) = gn_constants(spec)?;
    let e = discrete_energy(near, spec);
    let ratio = near.grad_norm_sq() / rho;
    let margin = |t: f64| {
        boundary_level_lower_bound_with(t.exp(), rho, spec, cp, cq).map_or(f64::NEG_INFINITY, |b| b - e)
    };
    let (lo, hi) = ((ratio * (1.0 + 1e-6)).ln(), (ratio * 1e4).ln());
    let (t, best) = golden_max(margin, lo, hi, 1e-8, 300);
    if !(best > 0.0) {
        return Err(PassError::GeometryFail {
            near_energy: e,
            far_energy: f64::NAN,
            boundary_bound: e + best,
        });
    }
    Ok(t.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StringConfig {
    /// Semi-implicit step for interior nodes.
    pub tau: f64,
    pub max_iter: usize,
    /// Stop when the max node's projected gradient is below this.
    pub tol: f64,
    /// Accept the capped result when the gradient is below this.
    pub loose_tol: f64,
    /// Iterations before the max node starts climbing.
    pub climb_after: usize,
    /// In [`mountain_pass`], Newton is tried from the max node after every
    /// this many iterations.
    pub newton_every: usize,
}

impl Default for StringConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            max_iter: 4000,
            tol: 1e-5,
            loose_tol: 1e-2,
            climb_after: 50,
            newton_every: 200,
        }
    }
}

/// `(W + τK)⁻¹ W (u + τ(ηf(u) - ωu))`, unnormalized, with `τ` capped by
/// `1/(4η max|f'(u)|)` so the explicit nonlinearity stays stable.
fn implicit_step(u: &Field, spec: &ProblemSpec, tau: f64) -> Vec<f64> {
    let mesh = u.mesh();
    let stiff = u
        .values()
        .iter()
        .map(|&v| (spec.eta * spec.df(v)).abs())
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    let tau = if stiff > 0.0 { tau.min(0.25 / stiff).max(1e-6 * tau) } else { tau };
    let k = mesh.stiffness().shifted(1.0 / tau, &mesh.w);
    let (omega, _) = stationarity(&Energy(*spec), u);
    let rhs: Vec<f64> = (0..mesh.len())
        .map(|i| {
            let v = u.values()[i];
            mesh.w[i] * (v / tau + spec.eta * spec.f(v) - omega * v)
        })
        .collect();
    k.solve(&rhs).unwrap_or_else(|| u.values().to_vec())
}

/// Dirichlet inner product `∫∇a·∇b` on the mesh.
fn dirichlet_dot(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let n = mesh.len();
    (0..n)
        .map(|i| {
            let (an, bn) = if i + 1 < n { (a[i + 1], b[i + 1]) } else { (0.0, 0.0) };
            mesh.s[i] * (an - a[i]) * (bn - b[i])
        })
        .sum()
}

/// `‖∇(a - b)‖₂`.
fn distance(a: &Field, b: &Field) -> f64 {
    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    a.mesh().dirichlet(&d).sqrt()
}

/// `m` nodes at equal Dirichlet-norm arclength along the polygon through
/// `nodes`, endpoints kept.
fn resample(nodes: &[Field], m: usize, rho: f64) -> Vec<Field> {
    let k = nodes.len();
    let mut s = Vec::with_capacity(k);
    s.push(0.0);
    for j in 1..k {
        s.push(s[j - 1] + distance(&nodes[j - 1], &nodes[j]));
    }
    let total = s[k - 1];
    if k < 2 || m < 2 || !(total > 0.0) {
        return nodes.to_vec();
    }
    let mut out = Vec::with_capacity(m);
    out.push(nodes[0].clone());
    let mut seg = 0;
    for j in 1..m - 1 {
        let target = total * j as f64 / (m - 1) as f64;
        while seg + 2 < k && s[seg + 1] < target {
            seg += 1;
        }
        let span = s[seg + 1] - s[seg];
        let t = if span > 0.0 { (target - s[seg]) / span } else { 0.0 };
        let vals = nodes[seg]
            .values()
            .iter()
            .zip(nodes[seg + 1].values())
            .map(|(a, b)| a + t * (b - a))
            .collect();
        let mut u = Field::new(nodes[0].mesh().clone(), vals);
        u.rescale_to(rho);
        out.push(u);
    }
    out.push(nodes[k - 1].clone());
    out
}

/// Equal Dirichlet-norm arclength, endpoints fixed.
fn reparametrize(nodes: &mut [Field], rho: f64) {
    if nodes.len() >= 3 {
        let fresh = resample(nodes, nodes.len(), rho);
        nodes.clone_from_slice(&fresh);
    }
}

/// First node past the maximum whose energy is below the start node.
fn exit_index(path: &PathState) -> Option<usize> {
    let e0 = path.energies[0];
    (path.max_index + 1..path.nodes.len()).find(|&k| path.energies[k] < e0)
}

/// String relaxation: each interior node takes the component of one
/// semi-implicit descent step normal to the path, then nodes are
/// reparametrized to equal arclength. After `climb_after` iterations the max
/// node reverses the tangential component of its step instead, and the two
/// sides are reparametrized separately.
///
/// Past the ridge `I_η` is unbounded below on the sphere through
/// concentration, so the string is cut at the first node after the maximum
/// whose energy drops below the start node; that node becomes the far
/// endpoint and the nodes are resampled. Both endpoints then stay below the
/// pass level.
pub fn string_relax(path: PathState, spec: &ProblemSpec, config: &StringConfig) -> Result<PathState, PassError> {
    let mut path = path;
    let rho = path.rho;
    let m = path.nodes.len();
    let mut prev_max = path.path_max();
    for it in 0..config.max_iter {
        if path.max_node_grad <= config.tol && it > config.climb_after {
            path.iterations = it;
            return Ok(path);
        }
        let climb = it >= config.climb_after && path.max_index > 0 && path.max_index < m - 1;
        let ci = path.max_index;
        let mut next: Vec<Field> = path.nodes.clone();
        for j in 1..m - 1 {
            let u = &path.nodes[j];
            let mut vals = implicit_step(u, spec, config.tau);
            let tangent: Vec<f64> = path.nodes[j + 1]
                .values()
                .iter()
                .zip(path.nodes[j - 1].values())
                .map(|(a, b)| a - b)
                .collect();
            let mesh = u.mesh();
            let tn = mesh.dirichlet(&tangent);
            if tn > 0.0 {
                let delta: Vec<f64> = vals.iter().zip(u.values()).map(|(a, b)| a - b).collect();
                let along = dirichlet_dot(mesh, &delta, &tangent) / tn;
                let k = if climb && j == ci { 2.0 } else { 1.0 };
                for i in 0..vals.len() {
                    vals[i] -= k * along * tangent[i];
                }
            }
            next[j].set_values(vals);
            if next[j].mass() > 0.0 {
                next[j].rescale_to(rho);
            }
        }
        if climb {
            reparametrize(&mut next[..=ci], rho);
            reparametrize(&mut next[ci..], rho);
        } else {
            reparametrize(&mut next, rho);
        }
        path.nodes = next;
        path.evaluate(spec);
        if let Some(k) = exit_index(&path).filter(|&k| k < m - 1) {
            path.nodes = resample(&path.nodes[..=k], m, rho);
            path.evaluate(spec);
        }
        let pm = path.path_max();
        if !climb {
            path.max_rise = path.max_rise.max(pm - prev_max);
        }
        prev_max = pm;
        if !pm.is_finite() {
            return Err(PassError::Stall {
                iterations: it,
                grad: path.max_node_grad,
                last: path.into(),
            });
        }
    }
    path.iterations = config.max_iter;
    if path.max_node_grad <= config.loose_tol {
        Ok(path)
    } else {
        Err(PassError::Stall {
            iterations: config.max_iter,
            grad: path.max_node_grad,
            last: path.into(),
        })
    }
}

/// Critical point of `I_η` on the mass sphere from Newton's method.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleResult {
    pub u: Field,
    pub omega: f64,
    pub energy: f64,
    /// Relative residual of the extended system.
    pub newton_residual: f64,
    pub eta_used: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 40,
        }
    }
}

/// `(F, scale)` with `F = Ku + ωWu - ηWf(u)` and `scale` the largest of the
/// three terms, all measured in `‖W^{-1}·‖_W`.
fn extended_residual(u: &Field, omega: f64, spec: &ProblemSpec, rho: f64) -> (Vec<f64>, f64) {
    let mesh = u.mesh();
    let ku = mesh.stiffness().mul(u.values());
    let n = mesh.len();
    let mut f = Vec::with_capacity(n);
    let (mut nk, mut nw, mut nf, mut nr) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let w = mesh.w[i];
        let ui = u.values()[i];
        let a = ku[i];
        let b = omega * w * ui;
        let c = w * spec.eta * spec.f(ui);
        f.push(a + b - c);
        nk += a * a / w;
        nw += b * b / w;
        nf += c * c / w;
        nr += (a + b - c) * (a + b - c) / w;
    }
    let scale = nk.max(nw).max(nf).sqrt();
    let res = (nr.sqrt() / scale).max((u.mass() - rho).abs() / rho);
    (f, res)
}

/// Bordered Newton for `{Ku + ωWu - ηWf(u) = 0, ‖u‖₂² = ρ}`.
///
/// With `J = K + ωW - ηW f'(u)`, each step solves `Jy = -F`, `Jz = Wu` and
/// sets `δω = (2(Wu)ᵀy - c)/(2(Wu)ᵀz)`, `δu = y - δω z`, `c = ρ - ‖u‖₂²`.
pub fn refine_saddle(u0: Field, omega0: f64, spec: &ProblemSpec, rho: f64, config: &NewtonConfig) -> Result<SaddleResult, PassError> {
    let mut u = u0;
    let mut omega = omega0;
    let mesh = u.mesh().clone();
    let n = mesh.len();
    let k = mesh.stiffness();
    let (_, mut res) = extended_residual(&u, omega, spec, rho);
    let mut best = res;
    let mut growth = 0;
    for it in 0..config.max_iter {
        if res <= config.tol {
            return Ok(finish_saddle(u, omega, spec, res, it));
        }
        let (f, _) = extended_residual(&u, omega, spec, rho);
        let diag: Vec<f64> = (0..n)
            .map(|i| k.diag[i] + mesh.w[i] * (omega - spec.eta * spec.df(u.values()[i])))
            .collect();
        let minus_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let wu: Vec<f64> = (0..n).map(|i| mesh.w[i] * u.values()[i]).collect();
        let y = solve_general(&k.off, &diag, &k.off, &minus_f).ok_or(PassError::NewtonDiverged { residual: res })?;
        let z = solve_general(&k.off, &diag, &k.off, &wu).ok_or(PassError::NewtonDiverged { residual: res })?;
        let c = rho - u.mass();
        let wy: f64 = wu.iter().zip(&y).map(|(a, b)| a * b).sum();
        let wz: f64 = wu.iter().zip(&z).map(|(a, b)| a * b).sum();
        let d_omega = (2.0 * wy - c) / (2.0 * wz);
        let vals: Vec<f64> = (0..n).map(|i| u.values()[i] + y[i] - d_omega * z[i]).collect();
        if !d_omega.is_finite() || vals.iter().any(|v| !v.is_finite()) {
            return Err(PassError::NewtonDiverged { residual: res });
        }
        u.set_values(vals);
        omega += d_omega;
        res = extended_residual(&u, omega, spec, rho).1;
        if res < best {
            best = res;
            growth = 0;
        } else {
            growth += 1;
            if growth >= 5 {
                return Err(PassError::NewtonDiverged { residual: res });
            }
        }
    }
    if res <= config.tol {
        Ok(finish_saddle(u, omega, spec, res, config.max_iter))
    } else {
        Err(PassError::NewtonDiverged { residual: res })
    }
}

fn finish_saddle(u: Field, omega: f64, spec: &ProblemSpec, res: f64, it: usize) -> SaddleResult {
    SaddleResult {
        energy: discrete_energy(&u, spec),
        u,
        omega,
        newton_residual: res,
        eta_used: spec.eta,
        iterations: it,
    }
}

/// Start of the mountain-pass path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NearEndpoint {
    /// The spread bubble `v₁`.
    #[default]
    Bubble,
    /// The local minimizer from the projected flow started at `√ρφ₁`.
    Minimizer,
}

/// Settings for the full mountain-pass pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassConfig {
    pub nodes: usize,
    pub cutoff: Cutoff,
    pub near: NearEndpoint,
    /// Far-endpoint scale; `None` uses [`choose_eps0`].
    pub eps0: Option<f64>,
    /// `None` uses [`choose_alpha`].
    pub alpha: Option<f64>,
    pub string: StringConfig,
    pub newton: NewtonConfig,
    pub flow: FlowConfig,
    /// Intervals of a finer mesh on which the saddle is re-solved by Newton
    /// after the string stage.
    pub fine_intervals: Option<usize>,
}

impl Default for PassConfig {
    fn default() -> Self {
        Self {
            nodes: 33,
            cutoff: Cutoff::default(),
            near: NearEndpoint::Bubble,
            eps0: None,
            alpha: None,
            string: StringConfig::default(),
            newton: NewtonConfig::default(),
            flow: FlowConfig::default(),
            fine_intervals: None,
        }
    }
}

/// Output of the mountain-pass pipeline.
#[derive(Debug, Clone)]
pub struct PassRun {
    pub geometry: Geometry,
    /// Max of `I_η` along the initial path.
    pub initial_max: f64,
    pub relaxed: PathState,
    pub saddle: SaddleResult,
    /// Present when the path starts at the flow minimizer.
    pub minimizer: Option<FlowResult>,
}

/// Initial path, string relaxation and Newton refinement of its max node.
pub fn mountain_pass(spec: &ProblemSpec, rho: f64, mesh: &Arc<Mesh>, config: &PassConfig) -> Result<PassRun, PassError> {
    spec.require_critical()?;
    let minimizer = match config.near {
        NearEndpoint::Bubble => None,
        NearEndpoint::Minimizer => Some(flow_to_minimizer(spec, rho, first_mode(mesh, rho), &config.flow)?),
    };
    let near = match &minimizer {
        Some(m) => m.u.clone(),
        None => bubble(1.0, spec, rho, &config.cutoff, mesh)?.v,
    };
    let alpha = match config.alpha {
        Some(a) => a,
        None => choose_alpha(spec, rho, &near)?,
    };
    let eps0 = match config.eps0 {
        Some(e) => e,
        None => choose_eps0(spec, rho, alpha, &config.cutoff, mesh)?,
    };
    let lead = minimizer.as_ref().map(|m| &m.u);
    let (path, geometry) = initial_path_from(lead, eps0, config.nodes, spec, rho, alpha, &config.cutoff, mesh)?;
    let initial_max = path.path_max();
    let (relaxed, mut saddle) = relax_and_refine(path, spec, rho, config)?;
    if let Some(n) = config.fine_intervals {
        let fine = Arc::new(Mesh::new(spec.dimension, spec.radius, n)?);
        saddle = refine_saddle(saddle.u.transfer(&fine), saddle.omega, spec, rho, &config.newton)?;
    }
    Ok(PassRun {
        geometry,
        initial_max,
        relaxed,
        saddle,
        minimizer,
    })
}

/// String relaxation in chunks of `newton_every` iterations, with Newton
/// tried from the max node after each chunk. A root is accepted when it is
/// positive and its energy lies between the endpoint energies and the
/// current path maximum.
fn relax_and_refine(
    path: PathState,
    spec: &ProblemSpec,
    rho: f64,
    config: &PassConfig,
) -> Result<(PathState, SaddleResult), PassError> {
    let total = config.string.max_iter;
    let chunk = config.string.newton_every.max(1);
    let mut path = path;
    let mut done = 0;
    let mut last_err = None;
    while done < total {
        let n = chunk.min(total - done);
        let cfg = StringConfig {
            max_iter: n,
            climb_after: config.string.climb_after.saturating_sub(done),
            ..config.string
        };
        let (next, converged) = match string_relax(path, spec, &cfg) {
            Ok(p) => (p, true),
            Err(PassError::Stall { last, .. }) => (*last, false),
            Err(e) => return Err(e),
        };
        path = next;
        done += path.iterations;
        path.iterations = done;
        let top = path.nodes[path.max_index].clone();
        let (omega0, _) = stationarity(&Energy(*spec), &top);
        match refine_saddle(top, omega0, spec, rho, &config.newton) {
            Ok(s) if accept_saddle(&s, &path) => return Ok((path, s)),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
        if converged && path.max_node_grad <= config.string.tol {
            break;
        }
    }
    Err(last_err.unwrap_or(PassError::Stall {
        iterations: done,
        grad: path.max_node_grad,
        last: path.into(),
    }))
}

fn accept_saddle(s: &SaddleResult, path: &PathState) -> bool {
    let m = path.energies.len();
    let floor = path.energies[0].max(path.energies[m - 1]);
    let top = path.path_max();
    let slack = 1e-8 * top.abs().max(1.0);
    s.u.min() >= -1e-10 * s.u.sup_norm() && s.energy > floor && s.energy <= top + slack
}

/// Mountain-pass level estimate at one `η`.
#[derive(Debug, Clone)]
pub struct EtaLevel {
    pub eta: f64,
    pub level: Result<SaddleResult, PassError>,
}

/// `c_η` over an increasing `η` grid, each run keeping the far endpoint
/// scale and α of the first successful one.
pub fn level_vs_eta(spec: &ProblemSpec, rho: f64, eta_grid: &[f64], mesh: &Arc<Mesh>, config: &PassConfig) -> Vec<EtaLevel> {
    let mut cfg = *config;
    let mut out = Vec::with_capacity(eta_grid.len());
    for &eta in eta_grid {
        let level = spec
            .with_eta(eta)
            .map_err(PassError::from)
            .and_then(|s| mountain_pass(&s, rho, mesh, &cfg))
            .map(|run| {
                cfg.eps0.get_or_insert(run.geometry.eps0);
                cfg.alpha.get_or_insert(run.geometry.alpha);
                run.saddle
            });
        out.push(EtaLevel { eta, level });
    }
    out
}

/// Largest violation of `c_{η_a} ≥ c_{η_b}` for `η_a < η_b` among the
/// successful estimates (zero when monotone).
pub fn monotonicity_violation(levels: &[EtaLevel]) -> f64 {
    let vals: Vec<f64> = levels
        .iter()
        .filter_map(|l| l.level.as_ref().ok().map(|s| s.energy))
        .collect();
    let mut worst = 0.0f64;
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            worst = worst.max(vals[j] - vals[i]);
        }
    }
    worst
}

/// Shape of `h_η(ρ)` without its constant: `(linear part, factor of C)`.
pub fn upper_remainder_shape(spec: &ProblemSpec, rho: f64) -> Result<(f64, f64), ParamError> {
    spec.require_dimension(3)?;
    let eta = spec.eta;
    let n = spec.n();
    Ok(match spec.dimension {
        3 => (0.25 * lambda1(3, spec.radius) * rho, rho * rho * eta.sqrt()),
        4 => (0.0, rho / (rho * eta).ln().abs()),
        _ => (0.0, rho.powf(0.5 * (n - 2.0)) * eta.powf((n - 2.0) * (n - 4.0) / 4.0)),
    })
}

/// `S^{N/2} η^{1-N/2} / N + h_η(ρ)` with constant `c`.
pub fn upper_level_bound(spec: &ProblemSpec, rho: f64, c: f64) -> Result<f64, ParamError> {
    let n = spec.n();
    let s = sobolev_constant(spec.dimension)?;
    let (lin, shape) = upper_remainder_shape(spec, rho)?;
    Ok(s.powf(0.5 * n) * spec.eta.powf(1.0 - 0.5 * n) / n + lin + c * shape)
}

/// Smallest `C ≥ 0` for which `energy` obeys [`upper_level_bound`].
pub fn implied_upper_constant(spec: &ProblemSpec, rho: f64, energy: f64) -> Result<f64, ParamError> {
    let base = upper_level_bound(spec, rho, 0.0)?;
    let (_, shape) = upper_remainder_shape(spec, rho)?;
    Ok(((energy - base) / shape).max(0.0))
}

/// Energy lower bound for solutions at `η = 1`: `(λ₁/N - δ)ρ` for
/// `p ≤ 2 + 4/N`, else `(1/2 - 2/(N(p-2)))λ₁ρ`.
pub fn lower_level_bound(spec: &ProblemSpec, rho: f64, delta: f64) -> f64 {
    let n = spec.n();
    let l1 = lambda1(spec.dimension, spec.radius);
    if spec.p <= 2.0 + 4.0 / n {
        (l1 / n - delta) * rho
    } else {
        (0.5 - 2.0 / (n * (spec.p - 2.0))) * l1 * rho
    }
}
