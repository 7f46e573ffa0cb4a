//! Eigenvalues, Sobolev and Gagliardo–Nirenberg constants.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // std builds resolve the inherent methods first
use num_traits::Float;

use crate::error::ParamError;
use crate::ode::{Flow, Integrator, Tolerance};
use crate::problem::{critical_exponent, sphere_area, ProblemSpec};
use crate::quad::GaussLegendre;
use crate::roots::brent;

const EIGEN_TOL: Tolerance = Tolerance::new(1e-13, 1e-15);
const SERIES_START: f64 = 1e-6;

/// Linear radial shot on the unit ball: `u'' = -(N-1)u'/r - λu`, `u(0) = 1`.
fn linear_shot_value(dimension: u32, lambda: f64) -> f64 {
    let n = dimension as f64;
    let sys = move |r: f64, y: &[f64; 2]| [y[1], -(n - 1.0) / r * y[1] - lambda * y[0]];
    let d = SERIES_START;
    let y0 = [1.0 - lambda * d * d / (2.0 * n), -lambda * d / n];
    let int = Integrator::with_tolerance(EIGEN_TOL);
    let mut zero = None;
    let out = int
        .solve(&sys, d, y0, 1.0, 1e-3, &[], |st| {
            if st.y0[0] > 0.0 && st.y1[0] <= 0.0 {
                zero = Some(int.locate_event(&sys, st, |y| y[0], 1e-15));
                Flow::Stop
            } else {
                Flow::Continue
            }
        })
        .expect("linear radial shot is well posed");
    match zero {
        // continuous extension past the first zero: u'(r0) (1 - r0)
        Some((r0, y)) => y[1] * (1.0 - r0),
        None => out.y[0],
    }
}

/// First Dirichlet eigenvalue of `-Δ` on the ball `B_R ⊂ R^N`.
pub fn lambda1(dimension: u32, radius: f64) -> f64 {
    assert!(dimension >= 1 && radius > 0.0);
    lambda1_unit(dimension) / (radius * radius)
}

fn lambda1_unit(dimension: u32) -> f64 {
    let mut lo = 0.5;
    let mut hi = lo;
    while linear_shot_value(dimension, hi) > 0.0 {
        lo = hi;
        hi *= 1.5;
    }
    brent(|l| linear_shot_value(dimension, l), lo, hi, 1e-15 * hi, 200)
        .expect("eigenvalue bracket has a sign change")
}

/// First Dirichlet eigenpair `(λ₁, φ₁)` on `B_R`, with `φ₁(0) > 0` and
/// `‖φ₁‖₂ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstEigenpair {
    pub dimension: u32,
    pub radius: f64,
    pub lambda1: f64,
    /// `φ₁(0)`.
    pub center_value: f64,
}

impl FirstEigenpair {
    pub fn new(dimension: u32, radius: f64) -> Self {
        let unit = lambda1_unit(dimension);
        let n = dimension as f64;
        // mass of the unit-ball profile with u(0) = 1
        let gl = GaussLegendre::new(40);
        let breaks: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        let grid: Vec<f64> = breaks
            .windows(2)
            .flat_map(|w| {
                let c = 0.5 * (w[0] + w[1]);
                let h = 0.5 * (w[1] - w[0]);
                gl.nodes.iter().map(move |x| c + h * x).collect::<Vec<_>>()
            })
            .collect();
        let vals = unit_profile(dimension, unit, &grid);
        let mut mass = 0.0;
        for (k, w) in breaks.windows(2).enumerate() {
            let h = 0.5 * (w[1] - w[0]);
            for (j, wt) in gl.weights.iter().enumerate() {
                let idx = k * gl.nodes.len() + j;
                let r = grid[idx];
                mass += wt * h * vals[idx].0 * vals[idx].0 * r.powi(dimension as i32 - 1);
            }
        }
        mass *= sphere_area(dimension);
        // scaling u(x) = c v(x/R): ‖u‖² = c² R^N ‖v‖²
        let center_value = 1.0 / (mass * radius.powf(n)).sqrt();
        Self {
            dimension,
            radius,
            lambda1: unit / (radius * radius),
            center_value,
        }
    }

    /// `(φ₁(r), φ₁'(r))` at sorted radii in `[0, R]`.
    pub fn sample(&self, radii: &[f64]) -> Vec<(f64, f64)> {
        let unit = self.lambda1 * self.radius * self.radius;
        let scaled: Vec<f64> = radii.iter().map(|r| r / self.radius).collect();
        unit_profile(self.dimension, unit, &scaled)
            .into_iter()
            .zip(radii)
            .map(|((v, dv), &r)| {
                let v = if r >= self.radius { 0.0 } else { v };
                (self.center_value * v, self.center_value * dv / self.radius)
            })
            .collect()
    }
}

/// Unit-ball eigenprofile with `v(0) = 1` at sorted points of `[0, 1]`.
fn unit_profile(dimension: u32, lambda: f64, points: &[f64]) -> Vec<(f64, f64)> {
    let n = dimension as f64;
    let sys = move |r: f64, y: &[f64; 2]| [y[1], -(n - 1.0) / r * y[1] - lambda * y[0]];
    let d = SERIES_START;
    let series = |r: f64| (1.0 - lambda * r * r / (2.0 * n), -lambda * r / n);
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    let outputs: Vec<f64> = points.iter().copied().filter(|&r| r > d).collect();
    for &r in points.iter().take_while(|&&r| r <= d) {
        out.push(series(r));
    }
    let (u0, du0) = series(d);
    let int = Integrator::with_tolerance(EIGEN_TOL);
    int.solve(&sys, d, [u0, du0], 1.0, 1e-3, &outputs, |st| {
        if st.at_output {
            out.push((st.y1[0], st.y1[1]));
        }
        Flow::Continue
    })
    .expect("linear radial shot is well posed");
    // repeated output points are reported once by the integrator
    let mut result = Vec::with_capacity(points.len());
    let mut k = 0;
    for (i, &r) in points.iter().enumerate() {
        if i > 0 && r == points[i - 1] {
            result.push(result[i - 1]);
        } else {
            result.push(out[k]);
            k += 1;
        }
    }
    result
}

/// Best constant `S` of `S‖u‖_{2*}² ≤ ‖∇u‖₂²` by radial quadrature of the
/// Aubin–Talenti profile `(1 + r²)^{-(N-2)/2}` with an exact tail series.
pub fn sobolev_constant(dimension: u32) -> Result<f64, ParamError> {
    if dimension < 3 {
        return Err(ParamError::Dimension {
            min: 3,
            got: dimension,
        });
    }
    let n = dimension as f64;
    let ni = dimension as i32;
    let r_max = 10.0;
    let gl = GaussLegendre::new(40);
    let breaks = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, r_max];
    let grad = gl.integrate_panels(
        |r| (n - 2.0) * (n - 2.0) * r.powi(ni + 1) * (1.0 + r * r).powi(-ni),
        &breaks,
    ) + (n - 2.0) * (n - 2.0) * tail_series(n, r_max, 2.0 - n);
    let crit = gl.integrate_panels(|r| r.powi(ni - 1) * (1.0 + r * r).powi(-ni), &breaks)
        + tail_series(n, r_max, -n);
    let area = sphere_area(dimension);
    Ok(area * grad / (area * crit).powf((n - 2.0) / n))
}

/// `∫_{R}^∞ r^{e-1} (1 + r^{-2})^{-N} dr = Σ_k C(-N, k) R^{e-2k} / (2k - e)`.
fn tail_series(n: f64, r_max: f64, e: f64) -> f64 {
    let mut coeff = 1.0;
    let mut sum = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        let term = coeff * r_max.powf(e - 2.0 * kf) / (2.0 * kf - e);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        coeff *= (-n - kf) / (kf + 1.0);
    }
    sum
}

/// Closed-form Talenti value `πN(N-2) (Γ(N/2)/Γ(N))^{2/N}`.
pub fn sobolev_constant_closed_form(dimension: u32) -> Result<f64, ParamError> {
    if dimension < 3 {
        return Err(ParamError::Dimension {
            min: 3,
            got: dimension,
        });
    }
    let n = dimension as f64;
    Ok(core::f64::consts::PI
        * n
        * (n - 2.0)
        * (libm::tgamma(n / 2.0) / libm::tgamma(n)).powf(2.0 / n))
}

/// Gagliardo–Nirenberg exponent `γ_q = N(q-2)/(2q)` for `2 ≤ q ≤ 2*`.
pub fn gn_gamma(dimension: u32, q: f64) -> Result<f64, ParamError> {
    let crit = critical_exponent(dimension);
    if !(q >= 2.0 && q <= crit * (1.0 + 1e-14)) {
        return Err(ParamError::OutOfRange {
            name: "q",
            value: q,
            range: format!("[2, {crit}]"),
        });
    }
    Ok(dimension as f64 * (q - 2.0) / (2.0 * q))
}

/// Mass below which minimizing sequences in `A_α` are precompact:
/// `(2*/2 · S^{2*/2})^{2/(2*-2)} / (α - λ₁)`.
pub fn compactness_mass_threshold(dimension: u32, radius: f64, alpha: f64) -> Result<f64, ParamError> {
    let s = sobolev_constant(dimension)?;
    let l1 = lambda1(dimension, radius);
    if !(alpha > l1) {
        return Err(ParamError::OutOfRange {
            name: "alpha",
            value: alpha,
            range: format!("({l1}, ∞)"),
        });
    }
    let c = critical_exponent(dimension);
    Ok((c / 2.0 * s.powf(c / 2.0)).powf(2.0 / (c - 2.0)) / (alpha - l1))
}

/// Constants shared by the solvers for one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub lambda1: f64,
    pub phi1: FirstEigenpair,
    /// `None` for `N < 3`.
    pub sobolev: Option<f64>,
    pub crit_exp: f64,
    pub sphere_area: f64,
    pub dimension: u32,
}

impl Constants {
    pub fn new(spec: &ProblemSpec) -> Self {
        let phi1 = FirstEigenpair::new(spec.dimension, spec.radius);
        Self {
            lambda1: phi1.lambda1,
            phi1,
            sobolev: sobolev_constant(spec.dimension).ok(),
            crit_exp: critical_exponent(spec.dimension),
            sphere_area: sphere_area(spec.dimension),
            dimension: spec.dimension,
        }
    }

    pub fn gn_gamma(&self, q: f64) -> Result<f64, ParamError> {
        gn_gamma(self.dimension, q)
    }
}
