//! Problem parameterization: `-Δu + ωu = η(μ u^{p-1} + u^{q-1})` on `B_R`.

use alloc::format;

#[allow(unused_imports)] // std builds resolve the inherent methods first
use num_traits::Float;

use crate::error::ParamError;

/// Dimension, exponents, coefficients and ball radius.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemSpec {
    pub dimension: u32,
    pub radius: f64,
    pub mu: f64,
    pub p: f64,
    pub q: f64,
    pub eta: f64,
}

impl ProblemSpec {
    pub fn new(dimension: u32, radius: f64, mu: f64, p: f64, q: f64) -> Result<Self, ParamError> {
        let spec = Self {
            dimension,
            radius,
            mu,
            p,
            q,
            eta: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Pure power nonlinearity `u^{q-1}` (μ = 0).
    pub fn pure_power(dimension: u32, radius: f64, q: f64) -> Result<Self, ParamError> {
        Self::new(dimension, radius, 0.0, q, q)
    }

    /// Critical Brezis–Nirenberg problem on `B_R` (μ = 0, q = 2*).
    pub fn critical(dimension: u32, radius: f64) -> Result<Self, ParamError> {
        if dimension < 3 {
            return Err(ParamError::Dimension {
                min: 3,
                got: dimension,
            });
        }
        Self::pure_power(dimension, radius, critical_exponent(dimension))
    }

    /// The linear reduction `η = 0`, `-Δu + ωu = 0`. It sits outside the
    /// validated range of `η` and is meant for eigenvalue checks.
    pub fn linear(dimension: u32, radius: f64) -> Result<Self, ParamError> {
        let mut spec = Self::new(dimension, radius, 0.0, 2.0, 2.0)?;
        spec.eta = 0.0;
        Ok(spec)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self, ParamError> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self, ParamError> {
        self.radius = radius;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.dimension < 1 {
            return Err(ParamError::Dimension {
                min: 1,
                got: self.dimension,
            });
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(ParamError::Radius(self.radius));
        }
        if !(self.p.is_finite() && self.q.is_finite() && self.p > 1.0 && self.p <= self.q) {
            return Err(ParamError::Exponents {
                p: self.p,
                q: self.q,
            });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ParamError::Eta(self.eta));
        }
        if !self.mu.is_finite() {
            return Err(ParamError::Mu(self.mu));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.dimension as f64
    }

    /// `2* = 2N/(N-2)`, or `+∞` for `N <= 2`.
    pub fn critical_exponent(&self) -> f64 {
        critical_exponent(self.dimension)
    }

    pub fn is_critical(&self) -> bool {
        self.dimension >= 3 && (self.q - self.critical_exponent()).abs() <= 1e-12 * self.q
    }

    pub fn is_supercritical(&self) -> bool {
        self.dimension >= 3 && self.q > self.critical_exponent() * (1.0 + 1e-12)
    }

    /// `μ = 0`, `q = 2*` on a ball: fixed-frequency uniqueness is known here.
    pub fn is_brezis_nirenberg(&self) -> bool {
        self.mu == 0.0 && self.is_critical()
    }

    /// Odd extension of `f(u) = μ|u|^{p-2}u + |u|^{q-2}u`, without `η`.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        let lower = if self.mu != 0.0 {
            self.mu * pow(a, self.p - 1.0)
        } else {
            0.0
        };
        let v = lower + pow(a, self.q - 1.0);
        if u < 0.0 {
            -v
        } else {
            v
        }
    }

    /// `F(u) = μ|u|^p/p + |u|^q/q`, without `η`.
    #[inline]
    pub fn big_f(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return 0.0;
        }
        let lower = if self.mu != 0.0 {
            self.mu * pow(a, self.p) / self.p
        } else {
            0.0
        };
        lower + pow(a, self.q) / self.q
    }

    /// `f'(u)`, without `η`.
    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        let a = u.abs();
        if a == 0.0 {
            return if self.q < 2.0 || (self.mu != 0.0 && self.p < 2.0) {
                f64::INFINITY
            } else if self.q == 2.0 {
                1.0 + if self.p == 2.0 { self.mu } else { 0.0 }
            } else if self.mu != 0.0 && self.p == 2.0 {
                self.mu
            } else {
                0.0
            };
        }
        let lower = if self.mu != 0.0 {
            self.mu * (self.p - 1.0) * pow(a, self.p - 2.0)
        } else {
            0.0
        };
        lower + (self.q - 1.0) * pow(a, self.q - 2.0)
    }

    /// `|B_R|`.
    pub fn ball_volume(&self) -> f64 {
        sphere_area(self.dimension) * self.radius.powi(self.dimension as i32) / self.n()
    }

    pub(crate) fn require_dimension(&self, min: u32) -> Result<(), ParamError> {
        if self.dimension < min {
            Err(ParamError::Dimension {
                min,
                got: self.dimension,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn require_critical(&self) -> Result<(), ParamError> {
        self.require_dimension(3)?;
        if !self.is_critical() {
            return Err(ParamError::OutOfRange {
                name: "q",
                value: self.q,
                range: format!("{{2* = {}}}", self.critical_exponent()),
            });
        }
        Ok(())
    }
}

pub fn critical_exponent(dimension: u32) -> f64 {
    if dimension >= 3 {
        let n = dimension as f64;
        2.0 * n / (n - 2.0)
    } else {
        f64::INFINITY
    }
}

/// Area of the unit sphere `S^{N-1}`; for `N = 1` this counts the two
/// endpoints of `(-1, 1)`.
pub fn sphere_area(dimension: u32) -> f64 {
    use core::f64::consts::PI;
    let (mut n, mut area) = if dimension % 2 == 1 { (1u32, 2.0) } else { (2u32, 2.0 * PI) };
    while n + 2 <= dimension {
        area *= 2.0 * PI / n as f64;
        n += 2;
    }
    area
}

/// `a^e`, through repeated multiplication when `e` is a small integer.
#[inline]
fn pow(a: f64, e: f64) -> f64 {
    if e == (e as i32) as f64 && e.abs() <= 16.0 {
        a.powi(e as i32)
    } else {
        a.powf(e)
    }
}
