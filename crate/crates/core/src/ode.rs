//! Adaptive Dormand–Prince 5(4) integration with step observers.
//!
//! The driver hands every accepted step to an observer, which may stop the
//! integration. Output points are hit exactly by clipping the step. Dense
//! values inside an accepted step are recovered by re-stepping from its left
//! end, which keeps the local error below the accepted step's error.

#[allow(unused_imports)] // std builds resolve the inherent methods first
use num_traits::Float;

use crate::error::OdeError;

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem<const D: usize> {
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D];
}

impl<const D: usize, F> OdeSystem<D> for F
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    fn rhs(&self, t: f64, y: &[f64; D]) -> [f64; D] {
        self(t, y)
    }
}

/// Mixed error control `|err_i| <= abs + rel * max(|y_i|, |y_new_i|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-12)
    }
}

/// What an observer wants after seeing an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// An accepted step `[t0, t1]`.
#[derive(Debug, Clone, Copy)]
pub struct Step<const D: usize> {
    pub t0: f64,
    pub y0: [f64; D],
    pub t1: f64,
    pub y1: [f64; D],
    /// True when `t1` is one of the requested output points.
    pub at_output: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Outcome<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    pub accepted: usize,
    pub rejected: usize,
    pub stopped: bool,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..D {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Adaptive Dormand–Prince driver.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub tol: Tolerance,
    pub h_min: f64,
    pub max_steps: usize,
    pub safety: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            h_min: 1e-15,
            max_steps: 2_000_000,
            safety: 0.9,
        }
    }
}

impl Integrator {
    pub fn with_tolerance(tol: Tolerance) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// One explicit step of size `h`; returns the fifth-order value, the
    /// derivative at the new point and the scaled error norm.
    pub fn step<S: OdeSystem<D>, const D: usize>(
        &self,
        sys: &S,
        t: f64,
        y: &[f64; D],
        k1: &[f64; D],
        h: f64,
    ) -> ([f64; D], [f64; D], f64) {
        let k2 = sys.rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
        let k3 = sys.rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = sys.rhs(
            t + C4 * h,
            &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = sys.rhs(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = sys.rhs(
            t + h,
            &axpy(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            y,
            h,
            &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = sys.rhs(t + h, &y_new);
        let mut err = 0.0f64;
        for i in 0..D {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.tol.abs + self.tol.rel * y[i].abs().max(y_new[i].abs());
            let r = (e / scale).abs();
            if r > err || r.is_nan() {
                err = r;
            }
        }
        (y_new, k7, err)
    }

    /// Value at `t` inside an accepted step starting at `(t0, y0)`.
    pub fn restep<S: OdeSystem<D>, const D: usize>(
        &self,
        sys: &S,
        t0: f64,
        y0: &[f64; D],
        t: f64,
    ) -> [f64; D] {
        let h = t - t0;
        if h == 0.0 {
            return *y0;
        }
        let k1 = sys.rhs(t0, y0);
        self.step(sys, t0, y0, &k1, h).0
    }

    /// Integrates from `t0` to `t_end`, hitting every point of `outputs`
    /// (sorted, inside `(t0, t_end]`) exactly.
    pub fn solve<S, const D: usize, O>(
        &self,
        sys: &S,
        t0: f64,
        y0: [f64; D],
        t_end: f64,
        h0: f64,
        outputs: &[f64],
        mut observer: O,
    ) -> Result<Outcome<D>, OdeError>
    where
        S: OdeSystem<D>,
        O: FnMut(&Step<D>) -> Flow,
    {
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut t = t0;
        let mut y = y0;
        let mut k1 = sys.rhs(t, &y);
        let mut h = h0.abs().max(self.h_min) * dir;
        let mut next_out = 0usize;
        while next_out < outputs.len() && (outputs[next_out] - t) * dir <= 0.0 {
            next_out += 1;
        }
        let mut accepted = 0usize;
        let mut rejected = 0usize;
        let span = (t_end - t0).abs();
        let mut steps = 0usize;
        while (t_end - t) * dir > 0.0 {
            steps += 1;
            if steps > self.max_steps {
                return Err(OdeError::TooManySteps { t });
            }
            let target = if next_out < outputs.len() {
                outputs[next_out]
            } else {
                t_end
            };
            let mut hit_output = false;
            let mut clipped = false;
            let mut h_try = h;
            if (t + h_try - target) * dir >= 0.0 {
                h_try = target - t;
                clipped = true;
                hit_output = next_out < outputs.len();
            } else if (t + 2.0 * h_try - target) * dir > 0.0 {
                // avoid a sliver step before the target
                h_try = 0.5 * (target - t);
            }
            if h_try.abs() < self.h_min && (target - t).abs() > self.h_min {
                return Err(OdeError::StepUnderflow { t, h: h_try });
            }
            let (y_new, k_new, err) = self.step(sys, t, &y, &k1, h_try);
            if !err.is_finite() {
                rejected += 1;
                h = h_try * 0.1;
                if h.abs() < self.h_min {
                    return Err(OdeError::NonFinite { t });
                }
                continue;
            }
            if err <= 1.0 {
                let t_new = if clipped { target } else { t + h_try };
                let st = Step {
                    t0: t,
                    y0: y,
                    t1: t_new,
                    y1: y_new,
                    at_output: hit_output,
                };
                accepted += 1;
                t = t_new;
                y = y_new;
                k1 = k_new;
                if hit_output {
                    while next_out < outputs.len() && (outputs[next_out] - t) * dir <= 0.0 {
                        next_out += 1;
                    }
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (self.safety * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // keep the natural step when it was clipped to an output point
                let base = if hit_output { h.abs().max(h_try.abs()) } else { h_try.abs() };
                h = (base * factor).min(span) * dir;
                if observer(&st) == Flow::Stop {
                    return Ok(Outcome {
                        t,
                        y,
                        accepted,
                        rejected,
                        stopped: true,
                    });
                }
            } else {
                rejected += 1;
                let factor = (self.safety * err.powf(-0.25)).clamp(0.1, 0.9);
                h = h_try * factor;
            }
        }
        Ok(Outcome {
            t,
            y,
            accepted,
            rejected,
            stopped: false,
        })
    }

    /// Locates a root of `g(y(t))` inside an accepted step whose endpoint
    /// values of `g` have opposite signs.
    pub fn locate_event<S, const D: usize, G>(
        &self,
        sys: &S,
        step: &Step<D>,
        g: G,
        t_tol: f64,
    ) -> (f64, [f64; D])
    where
        S: OdeSystem<D>,
        G: Fn(&[f64; D]) -> f64,
    {
        let f = |t: f64| g(&self.restep(sys, step.t0, &step.y0, t));
        let t = crate::roots::brent(f, step.t0, step.t1, t_tol, 200)
            .unwrap_or(0.5 * (step.t0 + step.t1));
        (t, self.restep(sys, step.t0, &step.y0, t))
    }
}
