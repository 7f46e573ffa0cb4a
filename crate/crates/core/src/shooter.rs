//! Radial shooting for `u'' + (N-1)u'/r = ωu - η(μu^{p-1} + u^{q-1})`,
//! `u'(0) = 0`, `u(R) = 0`, on the center value `a = u(0)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // std builds resolve the inherent methods first
use num_traits::Float;

use crate::error::{OdeError, ShootError};
use crate::ode::{Flow, Integrator, OdeSystem, Step, Tolerance};
use crate::problem::{sphere_area, ProblemSpec};
use crate::quad::{hermite, locate, simpson};
use crate::roots::brent;

/// Outcome class of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Classification {
    /// `u > 0` on `[0, R]`.
    Undershoot,
    /// First zero at `R` within tolerance.
    Hit,
    /// First zero strictly inside `(0, R)`.
    Overshoot,
}

/// Shooting parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShootConfig {
    /// Integrator tolerance; the absolute part is scaled by `min(a, 1/a)`.
    pub tol: Tolerance,
    /// Accept `|u(R)| <= hit_tol · a`, or `hit_tol · R|u'(R)|` when
    /// integrating relative to the bubble.
    pub hit_tol: f64,
    pub a_min: f64,
    pub a_max: f64,
    /// Ratio of the cold bracket expansion.
    pub expansion: f64,
    /// Even number of output intervals for solution profiles.
    pub grid_intervals: usize,
    pub max_iter: usize,
    /// Integrate relative to the whole-space bubble when `q = 2*`.
    pub bubble_reference: bool,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            hit_tol: 1e-10,
            a_min: 1e-8,
            a_max: 1e8,
            expansion: 2.0,
            grid_intervals: 2000,
            max_iter: 200,
            bubble_reference: true,
        }
    }
}

/// Samples `(r, u, u')` on an output grid `r = r(s)`, `s ∈ [0, 1]` uniform.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Profile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// `dr/ds` at the nodes.
    pub jac: Vec<f64>,
}

impl Profile {
    /// Profile on a uniform radial grid.
    pub fn uniform(r: Vec<f64>, u: Vec<f64>, du: Vec<f64>) -> Self {
        let span = r[r.len() - 1] - r[0];
        let jac = vec![span; r.len()];
        Self { r, u, du, jac }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `∫ g(r, u, u') dr` by composite Simpson in `s`.
    pub fn integrate<G: Fn(f64, f64, f64) -> f64>(&self, g: G) -> f64 {
        let n = self.r.len() - 1;
        let vals: Vec<f64> = (0..=n)
            .map(|i| g(self.r[i], self.u[i], self.du[i]) * self.jac[i])
            .collect();
        simpson(&vals, 1.0 / n as f64)
    }

    /// Hermite interpolation of `u` at `r`.
    pub fn eval(&self, r: f64) -> f64 {
        let i = locate(&self.r, r);
        hermite(
            self.r[i],
            self.u[i],
            self.du[i],
            self.r[i + 1],
            self.u[i + 1],
            self.du[i + 1],
            r,
        )
    }

    /// Hermite interpolation of `u'` at `r` (derivative of the cubic).
    pub fn eval_slope(&self, r: f64) -> f64 {
        let i = locate(&self.r, r);
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (y0, y1, d0, d1) = (self.u[i], self.u[i + 1], self.du[i], self.du[i + 1]);
        ((6.0 * t * t - 6.0 * t) * (y0 - y1)) / h
            + (3.0 * t * t - 4.0 * t + 1.0) * d0
            + (3.0 * t * t - 2.0 * t) * d1
    }
}

/// Integral quantities of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Norms {
    pub rho: f64,
    pub grad_norm_sq: f64,
    /// `‖u‖_p^p`.
    pub lp: f64,
    /// `‖u‖_q^q`.
    pub lq: f64,
    pub energy: f64,
}

/// Mass, gradient norm, Lebesgue norms and `I_η` of a profile, with weight
/// `|S^{N-1}| r^{N-1}`.
pub fn norms_of(profile: &Profile, spec: &ProblemSpec) -> Norms {
    let area = sphere_area(spec.dimension);
    let k = spec.dimension as i32 - 1;
    let rho = area * profile.integrate(|r, u, _| u * u * r.powi(k));
    let grad_norm_sq = area * profile.integrate(|r, _, du| du * du * r.powi(k));
    let lp = area * profile.integrate(|r, u, _| u.abs().powf(spec.p) * r.powi(k));
    let lq = area * profile.integrate(|r, u, _| u.abs().powf(spec.q) * r.powi(k));
    let energy = 0.5 * grad_norm_sq - spec.eta * (spec.mu / spec.p * lp + lq / spec.q);
    Norms {
        rho,
        grad_norm_sq,
        lp,
        lq,
        energy,
    }
}

/// One integration from the center.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShotResult {
    pub center_value: f64,
    pub omega: f64,
    pub profile: Profile,
    pub boundary_value: f64,
    pub boundary_slope: f64,
    /// Sign changes of `u` on `(0, R)`.
    pub crossings: usize,
    pub first_zero: Option<f64>,
    /// Radius where the state stopped being finite.
    pub blow_up: Option<f64>,
    pub classification: Classification,
}

/// A positive radial solution with its frequency and integral quantities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialSolution {
    pub spec: ProblemSpec,
    pub omega: f64,
    pub center_value: f64,
    pub profile: Profile,
    pub rho: f64,
    pub energy: f64,
    pub grad_norm_sq: f64,
    pub lp_norm: f64,
    pub lq_norm: f64,
    pub boundary_value: f64,
    pub boundary_slope: f64,
    /// Fixed-frequency uniqueness holds (μ = 0, q = 2*, ball).
    pub uniqueness_known: bool,
}

impl RadialSolution {
    pub fn lambda(&self) -> f64 {
        -self.omega
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    /// `max u'` over the grid.
    pub fn max_slope(&self) -> f64 {
        self.profile
            .du
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sup-norm distance to another solution on the same ball, sampled on
    /// the union of both grids.
    pub fn sup_distance(&self, other: &RadialSolution) -> f64 {
        let a = self
            .profile
            .r
            .iter()
            .map(|&r| (self.eval(r) - other.eval(r)).abs());
        let b = other
            .profile
            .r
            .iter()
            .map(|&r| (self.eval(r) - other.eval(r)).abs());
        a.chain(b).fold(0.0, f64::max)
    }

    /// `sup|u|`, attained at the center for ground states.
    pub fn sup_norm(&self) -> f64 {
        self.profile.u.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Whole-space critical bubble `U(r) = a(1 + k r²)^{-(N-2)/2}`, solving
/// `-ΔU = ηU^{2*-1}` with `U(0) = a`.
#[derive(Debug, Clone, Copy)]
struct Bubble {
    a: f64,
    k: f64,
    m: f64,
}

impl Bubble {
    fn new(a: f64, spec: &ProblemSpec) -> Self {
        let n = spec.n();
        Self {
            a,
            k: spec.eta * a.powf(4.0 / (n - 2.0)) / (n * (n - 2.0)),
            m: 0.5 * (n - 2.0),
        }
    }

    #[inline]
    fn at(&self, r: f64) -> [f64; 2] {
        let s = 1.0 + self.k * r * r;
        let u = self.a * s.powf(-self.m);
        [u, -2.0 * self.m * self.k * r * u / s]
    }
}

/// The radial ODE in `y = (u, u')`, or in `y = (u - U, u' - U')` relative to
/// a bubble `U`. The second form keeps the miss well conditioned when `u` is
/// concentrated, since `u(R)` is then resolved relative to the tail.
struct RadialOde<'a> {
    spec: &'a ProblemSpec,
    omega: f64,
    nm1: f64,
    bubble: Option<Bubble>,
}

impl RadialOde<'_> {
    /// `(u, u')` from the integration state.
    #[inline]
    fn physical(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        match self.bubble {
            None => *y,
            Some(b) => {
                let ub = b.at(r);
                [ub[0] + y[0], ub[1] + y[1]]
            }
        }
    }
}

impl OdeSystem<2> for RadialOde<'_> {
    #[inline]
    fn rhs(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        let s = self.spec;
        let Some(b) = self.bubble else {
            return [y[1], -self.nm1 / r * y[1] + self.omega * y[0] - s.eta * s.f(y[0])];
        };
        let ub = b.at(r)[0];
        let u = ub + y[0];
        let lower = if s.mu != 0.0 {
            s.mu * u.abs().powf(s.p - 1.0).copysign(u)
        } else {
            0.0
        };
        let top = ub.powf(s.q - 1.0);
        // u^{q-1} - U^{q-1} without cancellation
        let diff = if y[0] > -ub {
            top * ((s.q - 1.0) * (y[0] / ub).ln_1p()).exp_m1()
        } else {
            -u.abs().powf(s.q - 1.0) - top
        };
        [y[1], -self.nm1 / r * y[1] + self.omega * u - s.eta * (lower + diff)]
    }
}

/// Brent search for a zero of `g(u, u')` inside an accepted step.
fn locate_physical<G: Fn(&[f64; 2]) -> f64>(
    int: &Integrator,
    sys: &RadialOde<'_>,
    st: &Step<2>,
    g: G,
    t_tol: f64,
) -> (f64, [f64; 2]) {
    let at = |t: f64| sys.physical(t, &int.restep(sys, st.t0, &st.y0, t));
    let t = brent(|t| g(&at(t)), st.t0, st.t1, t_tol, 200).unwrap_or(0.5 * (st.t0 + st.t1));
    (t, at(t))
}

/// Sign classification with a continuous signed miss distance `g(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub classification: Classification,
    /// `u(R)` without interior zero, else `u'(r₀)(R - r₀)` at the first zero.
    pub miss: f64,
    pub first_zero: Option<f64>,
    /// First radius with `u = a/2`, if any.
    pub half_radius: Option<f64>,
}

/// Shooting solver for one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shooter {
    pub spec: ProblemSpec,
    pub config: ShootConfig,
}

impl Shooter {
    pub fn new(spec: ProblemSpec) -> Self {
        Self {
            spec,
            config: ShootConfig::default(),
        }
    }

    pub fn with_config(spec: ProblemSpec, config: ShootConfig) -> Self {
        Self { spec, config }
    }

    fn system(&self, omega: f64) -> RadialOde<'_> {
        RadialOde {
            spec: &self.spec,
            omega,
            nm1: self.spec.n() - 1.0,
            bubble: None,
        }
    }

    /// Bubble reference for center value `a`, used for critical `q`.
    fn reference(&self, a: f64) -> Option<Bubble> {
        let s = &self.spec;
        (self.config.bubble_reference && s.is_critical() && s.eta > 0.0).then(|| Bubble::new(a, s))
    }

    fn system_for(&self, a: f64, omega: f64) -> RadialOde<'_> {
        RadialOde {
            bubble: self.reference(a),
            ..self.system(omega)
        }
    }

    /// Series start `δ` and integration state there, with the quadratic
    /// coefficient `c` of `u = a + c r² + d r⁴ + …`.
    fn start(&self, a: f64, omega: f64) -> (f64, [f64; 2], f64) {
        let s = &self.spec;
        let n = s.n();
        let c = (omega * a - s.eta * s.f(a)) / (2.0 * n);
        let mut delta = 1e-6 * s.radius;
        if c != 0.0 {
            delta = delta.min(1e-3 * (a / c.abs()).sqrt());
        }
        let d2 = delta * delta;
        if self.reference(a).is_some() {
            // coefficients of u - U, free of the cancellation a - a
            let lower = if s.mu != 0.0 { s.mu * a.powf(s.p - 1.0) } else { 0.0 };
            let dlower = if s.mu != 0.0 {
                s.mu * (s.p - 1.0) * a.powf(s.p - 2.0)
            } else {
                0.0
            };
            let cv = (omega * a - s.eta * lower) / (2.0 * n);
            let dv = ((omega - s.eta * dlower) * c - s.eta * (s.q - 1.0) * a.powf(s.q - 2.0) * cv)
                / (4.0 * (n + 2.0));
            return (delta, [cv * d2 + dv * d2 * d2, 2.0 * cv * delta + 4.0 * dv * d2 * delta], c);
        }
        let d = (omega - s.eta * s.df(a)) * c / (4.0 * (n + 2.0));
        (delta, [a + c * d2 + d * d2 * d2, 2.0 * c * delta + 4.0 * d * d2 * delta], c)
    }

    fn integrator(&self, a: f64, delta: f64) -> Integrator {
        // tails of concentrated profiles are O(1/a), so the absolute floor
        // scales with min(a, 1/a)
        let mut int = Integrator::with_tolerance(Tolerance::new(
            self.config.tol.rel,
            self.config.tol.abs * a.min(1.0 / a),
        ));
        int.h_min = 1e-9 * delta;
        int
    }

    fn hit_band(&self, a: f64, boundary_slope: f64) -> f64 {
        let scale = if self.reference(a).is_some() {
            self.spec.radius * boundary_slope.abs()
        } else {
            a
        };
        self.config.hit_tol * scale
    }

    fn initial_step(&self, a: f64, c: f64, delta: f64) -> f64 {
        let scale = if c != 0.0 {
            (a / c.abs()).sqrt().min(self.spec.radius)
        } else {
            self.spec.radius
        };
        (1e-3 * scale).max(delta)
    }

    /// Classifies the shot from `a`, stopping at the first interior zero.
    pub fn probe(&self, a: f64, omega: f64) -> Result<Probe, ShootError> {
        let sys = self.system_for(a, omega);
        let (delta, y0, c) = self.start(a, omega);
        let int = self.integrator(a, delta);
        let r_end = self.spec.radius;
        let half = 0.5 * a;
        let mut zero = None;
        let mut half_radius = None;
        let res = int.solve(
            &sys,
            delta,
            y0,
            r_end,
            self.initial_step(a, c, delta),
            &[],
            |st| {
                let u0 = sys.physical(st.t0, &st.y0)[0];
                let u1 = sys.physical(st.t1, &st.y1)[0];
                if half_radius.is_none() && u0 > half && u1 <= half {
                    half_radius = Some(locate_physical(&int, &sys, st, |y| y[0] - half, 1e-12).0);
                }
                if u0 > 0.0 && u1 <= 0.0 {
                    zero = Some(locate_physical(&int, &sys, st, |y| y[0], 1e-14 * r_end));
                    Flow::Stop
                } else {
                    Flow::Continue
                }
            },
        );
        let out = match res {
            Ok(out) => out,
            Err(OdeError::NonFinite { t }) => {
                return Ok(Probe {
                    classification: Classification::Overshoot,
                    miss: -a * (r_end - t).max(1e-300) / r_end,
                    first_zero: Some(t),
                    half_radius,
                })
            }
            Err(e) => return Err(e.into()),
        };
        // Only signs classify here: concentrated profiles have |u(R)|/a tiny
        // without any zero nearby, so the relative hit band is applied to
        // converged center values only.
        let (miss, first_zero) = match zero {
            Some((r0, y)) => (y[1] * (r_end - r0), Some(r0)),
            None => (sys.physical(out.t, &out.y)[0], None),
        };
        let classification = if miss == 0.0 {
            Classification::Hit
        } else if first_zero.is_some() {
            Classification::Overshoot
        } else {
            Classification::Undershoot
        };
        Ok(Probe {
            classification,
            miss,
            first_zero,
            half_radius,
        })
    }

    /// Integrates from the center to `R`, sampling on `grid` (sorted, in
    /// `[0, R]`) and counting interior sign changes.
    pub fn integrate_on_grid(&self, a: f64, omega: f64, grid: &[f64]) -> Result<ShotResult, ShootError> {
        let sys = self.system_for(a, omega);
        let (delta, y0, c) = self.start(a, omega);
        let int = self.integrator(a, delta);
        let r_end = self.spec.radius;
        let mut r = Vec::with_capacity(grid.len());
        let mut u = Vec::with_capacity(grid.len());
        let mut du = Vec::with_capacity(grid.len());
        for &x in grid.iter().take_while(|&&x| x <= delta) {
            r.push(x);
            u.push(a + c * x * x);
            du.push(2.0 * c * x);
        }
        let outputs: Vec<f64> = grid.iter().copied().filter(|&x| x > delta).collect();
        let mut crossings = 0usize;
        let mut first_zero = None;
        let res = int.solve(
            &sys,
            delta,
            y0,
            r_end,
            self.initial_step(a, c, delta),
            &outputs,
            |st| {
                let s0 = sys.physical(st.t0, &st.y0)[0];
                let p1 = sys.physical(st.t1, &st.y1);
                if st.at_output {
                    r.push(st.t1);
                    u.push(p1[0]);
                    du.push(p1[1]);
                }
                let s1 = p1[0];
                let interior = st.t1 < r_end && ((s0 > 0.0 && s1 <= 0.0) || (s0 < 0.0 && s1 >= 0.0));
                let at_end = st.t1 >= r_end && s0 > 0.0 && s1 < -self.hit_band(a, p1[1]);
                if interior || at_end {
                    crossings += 1;
                    if first_zero.is_none() {
                        first_zero = Some(locate_physical(&int, &sys, st, |y| y[0], 1e-14 * r_end).0);
                    }
                }
                Flow::Continue
            },
        );
        let (blow_up, y_end) = match res {
            Ok(out) => (None, sys.physical(out.t, &out.y)),
            Err(OdeError::NonFinite { t }) => (Some(t), [f64::NAN, f64::NAN]),
            Err(e) => return Err(e.into()),
        };
        let boundary_value = y_end[0];
        let classification = if blow_up.is_some() || first_zero.is_some() {
            if first_zero.is_none() && blow_up.is_some() {
                first_zero = blow_up;
            }
            Classification::Overshoot
        } else if boundary_value.abs() <= self.hit_band(a, y_end[1]) {
            Classification::Hit
        } else {
            Classification::Undershoot
        };
        let n = r.len();
        Ok(ShotResult {
            center_value: a,
            omega,
            profile: Profile {
                jac: vec![if n > 1 { r[n - 1] - r[0] } else { 0.0 }; n],
                r,
                u,
                du,
            },
            boundary_value,
            boundary_slope: y_end[1],
            crossings,
            first_zero,
            blow_up,
            classification,
        })
    }

    /// Shot on a uniform grid with `config.grid_intervals` intervals.
    pub fn integrate_from_center(&self, a: f64, omega: f64) -> Result<ShotResult, ShootError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(ShootError::Param(crate::error::ParamError::OutOfRange {
                name: "center value",
                value: a,
                range: alloc::string::String::from("(0, ∞)"),
            }));
        }
        let n = self.config.grid_intervals;
        let r_end = self.spec.radius;
        let grid: Vec<f64> = (0..=n).map(|i| r_end * i as f64 / n as f64).collect();
        self.integrate_on_grid(a, omega, &grid)
    }

    fn miss(&self, a: f64, omega: f64) -> Result<f64, ShootError> {
        Ok(self.probe(a, omega)?.miss)
    }

    /// Undershoot/overshoot bracket `(a_under, a_over)`, expanding from
    /// `seed` by factors that grow from `initial_ratio` up to
    /// `config.expansion`.
    fn bracket_from(&self, omega: f64, seed: f64, initial_ratio: f64) -> Result<(f64, f64), ShootError> {
        let cfg = &self.config;
        let mut a = seed.clamp(cfg.a_min, cfg.a_max);
        let first = self.probe(a, omega)?;
        match first.classification {
            Classification::Hit => return Ok((a, a)),
            Classification::Undershoot => {
                let mut ratio = initial_ratio;
                while a < cfg.a_max {
                    let next = (a * ratio).min(cfg.a_max);
                    let p = self.probe(next, omega)?;
                    match p.classification {
                        Classification::Undershoot => a = next,
                        Classification::Hit => return Ok((next, next)),
                        Classification::Overshoot => return Ok((a, next)),
                    }
                    ratio = (ratio * ratio).min(cfg.expansion);
                }
            }
            Classification::Overshoot => {
                let mut ratio = initial_ratio;
                while a > cfg.a_min {
                    let next = (a / ratio).max(cfg.a_min);
                    let p = self.probe(next, omega)?;
                    match p.classification {
                        Classification::Overshoot => a = next,
                        Classification::Hit => return Ok((next, next)),
                        Classification::Undershoot => return Ok((next, a)),
                    }
                    ratio = (ratio * ratio).min(cfg.expansion);
                }
            }
        }
        Err(ShootError::NoBracket { omega })
    }

    /// Refines a bracket to a hit and builds the solution.
    fn refine(&self, omega: f64, lo: f64, hi: f64) -> Result<RadialSolution, ShootError> {
        let a = if lo == hi {
            lo
        } else {
            // plain shots are noisy at the hit_tol · a level, so that band
            // counts as an exact root
            let band = if self.reference(hi).is_some() {
                0.0
            } else {
                0.01 * self.config.hit_tol
            };
            let mut failure = None;
            let root = brent(
                |a| match self.miss(a, omega) {
                    Ok(m) if m.abs() <= band * a => 0.0,
                    Ok(m) => m,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                },
                lo,
                hi,
                4.0 * f64::EPSILON * hi,
                self.config.max_iter,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            root.ok_or(ShootError::NoBracket { omega })?
        };
        self.solution(a, omega)
    }

    /// Builds a `RadialSolution` from a converged center value, sampling on
    /// a grid graded toward the center when the profile is concentrated.
    pub fn solution(&self, a: f64, omega: f64) -> Result<RadialSolution, ShootError> {
        let probe = self.probe(a, omega)?;
        let r_end = self.spec.radius;
        let n = self.config.grid_intervals;
        let half = probe.half_radius.unwrap_or(r_end);
        let (grid, jac) = graded_grid(r_end, n, half);
        let shot = self.integrate_on_grid(a, omega, &grid)?;
        if shot.profile.len() != grid.len() {
            return Err(ShootError::NotConverged {
                omega,
                residual: f64::NAN,
            });
        }
        let band = self.hit_band(a, shot.boundary_slope);
        if shot.boundary_value.abs() > band || shot.crossings > 0 {
            return Err(ShootError::NotConverged {
                omega,
                residual: shot.boundary_value.abs() * self.config.hit_tol / band,
            });
        }
        let mut profile = shot.profile;
        profile.jac = jac;
        let norms = norms_of(&profile, &self.spec);
        Ok(RadialSolution {
            spec: self.spec,
            omega,
            center_value: a,
            profile,
            rho: norms.rho,
            energy: norms.energy,
            grad_norm_sq: norms.grad_norm_sq,
            lp_norm: norms.lp,
            lq_norm: norms.lq,
            boundary_value: shot.boundary_value,
            boundary_slope: shot.boundary_slope,
            uniqueness_known: self.spec.is_brezis_nirenberg(),
        })
    }

    /// Ground state at frequency `ω`, bracketing from `a = 1`.
    pub fn shoot_ground_state(&self, omega: f64) -> Result<RadialSolution, ShootError> {
        let (lo, hi) = self.bracket_from(omega, 1.0, self.config.expansion)?;
        self.refine(omega, lo, hi)
    }

    /// Ground state at `ω` bracketed locally around a previous center value,
    /// falling back to the cold search.
    pub fn shoot_from(&self, omega: f64, seed: f64) -> Result<RadialSolution, ShootError> {
        match self.bracket_from(omega, seed, 1.02) {
            Ok((lo, hi)) => self.refine(omega, lo, hi),
            Err(ShootError::NoBracket { .. }) => self.shoot_ground_state(omega),
            Err(e) => Err(e),
        }
    }

    /// Ground state at `ω` bracketed locally around `seed`, without fallback.
    pub fn shoot_local(&self, omega: f64, seed: f64) -> Result<RadialSolution, ShootError> {
        let (lo, hi) = self.bracket_from(omega, seed, 1.02)?;
        self.refine(omega, lo, hi)
    }

    /// Every ground state whose center value is bracketed on a geometric
    /// scan of `samples` points over `[a_lo, a_hi]`.
    pub fn all_ground_states(
        &self,
        omega: f64,
        a_lo: f64,
        a_hi: f64,
        samples: usize,
    ) -> Result<Vec<RadialSolution>, ShootError> {
        let samples = samples.max(2);
        let ratio = (a_hi / a_lo).powf(1.0 / (samples - 1) as f64);
        let mut out = Vec::new();
        let mut prev: Option<(f64, Classification)> = None;
        for k in 0..samples {
            let a = a_lo * ratio.powi(k as i32);
            let c = self.probe(a, omega)?.classification;
            if c == Classification::Hit {
                out.push(self.solution(a, omega)?);
            } else if let Some((pa, pc)) = prev {
                if pc != Classification::Hit && pc != c {
                    out.push(self.refine(omega, pa, a)?);
                }
            }
            prev = Some((a, c));
        }
        Ok(out)
    }

    /// Solution with prescribed mass near `(ω₀, a₀)`: secant iteration on
    /// `ω ↦ ρ(ω) - ρ`, re-bracketing the center value locally each time.
    pub fn solve_at_mass(&self, rho: f64, omega0: f64, a0: f64) -> Result<RadialSolution, ShootError> {
        let mut s0 = self.shoot_local(omega0, a0)?;
        let step = 1e-4 * omega0.abs().max(1.0);
        let mut s1 = self
            .shoot_local(omega0 + step, s0.center_value)
            .or_else(|_| self.shoot_local(omega0 - step, s0.center_value))?;
        let mut best = if (s0.rho - rho).abs() <= (s1.rho - rho).abs() {
            s0.clone()
        } else {
            s1.clone()
        };
        for _ in 0..60 {
            let f0 = s0.rho - rho;
            let f1 = s1.rho - rho;
            if f1.abs() <= 1e-13 * rho {
                return Ok(s1);
            }
            if f1 == f0 {
                break;
            }
            let mut next = s1.omega - f1 * (s1.omega - s0.omega) / (f1 - f0);
            let limit = 0.5 * (1.0 + s1.omega.abs());
            next = next.clamp(s1.omega - limit, s1.omega + limit);
            let s2 = self.shoot_local(next, s1.center_value)?;
            if (s2.rho - rho).abs() < (best.rho - rho).abs() {
                best = s2.clone();
            }
            if (s2.omega - s1.omega).abs() <= 1e-14 * (1.0 + s2.omega.abs()) {
                return Ok(best);
            }
            s0 = s1;
            s1 = s2;
        }
        if (best.rho - rho).abs() <= 1e-10 * rho {
            Ok(best)
        } else {
            Err(ShootError::NotConverged {
                omega: best.omega,
                residual: (best.rho - rho).abs() / rho,
            })
        }
    }
}

/// Grid `r(s) = R (e^{κs} - 1)/(e^κ - 1)` with `n` uniform steps in `s`,
/// graded so the central spacing is about `half/40`. Returns the nodes and
/// `dr/ds`.
pub fn graded_grid(radius: f64, n: usize, half: f64) -> (Vec<f64>, Vec<f64>) {
    let target = n as f64 * half / 40.0;
    let kappa = if target >= radius {
        0.0
    } else {
        // R κ/(e^κ - 1) decreases from R at κ = 0
        let f = |k: f64| radius * k / k.exp_m1() - target;
        brent(f, 1e-12, 700.0, 1e-12, 200).unwrap_or(0.0)
    };
    let mut r = Vec::with_capacity(n + 1);
    let mut jac = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = i as f64 / n as f64;
        if kappa == 0.0 {
            r.push(radius * s);
            jac.push(radius);
        } else {
            let e = kappa.exp_m1();
            r.push(radius * (kappa * s).exp_m1() / e);
            jac.push(radius * kappa * (kappa * s).exp() / e);
        }
    }
    r[n] = radius;
    (r, jac)
}

/// Shot with default settings.
pub fn integrate_from_center(a: f64, omega: f64, spec: &ProblemSpec) -> Result<ShotResult, ShootError> {
    Shooter::new(*spec).integrate_from_center(a, omega)
}

/// Ground state with default settings.
pub fn shoot_ground_state(omega: f64, spec: &ProblemSpec) -> Result<RadialSolution, ShootError> {
    Shooter::new(*spec).shoot_ground_state(omega)
}
