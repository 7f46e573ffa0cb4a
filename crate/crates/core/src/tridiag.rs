//! Tridiagonal linear algebra.

use alloc::vec;
use alloc::vec::Vec;

/// Symmetric tridiagonal matrix: `diag[i]`, and `off[i]` coupling `i, i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// `self + c * diag(d)`.
    pub fn shifted(&self, c: f64, d: &[f64]) -> Self {
        let diag = self.diag.iter().zip(d).map(|(a, b)| a + c * b).collect();
        Self {
            diag,
            off: self.off.clone(),
        }
    }

    /// Solves with partial pivoting, so indefinite matrices are fine.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        solve_general(&self.off, &self.diag, &self.off, rhs)
    }
}

/// Solves a general tridiagonal system `sub[i-1] x[i-1] + diag[i] x[i] +
/// sup[i] x[i+1] = rhs[i]` by Gaussian elimination with partial pivoting.
/// Returns `None` for a numerically singular matrix.
pub fn solve_general(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut d = diag.to_vec();
    let mut du = vec![0.0; n];
    let mut du2 = vec![0.0; n];
    du[..n - 1].copy_from_slice(&sup[..n - 1]);
    let mut dl = sub.to_vec();
    let mut b = rhs.to_vec();
    let scale = diag
        .iter()
        .chain(sub)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for i in 0..n - 1 {
        if dl[i].abs() > d[i].abs() {
            // swap rows i and i+1
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - f * d[i + 1];
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
            dl[i] = f;
            b.swap(i, i + 1);
            b[i + 1] -= f * b[i];
        } else {
            if d[i] == 0.0 {
                return None;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            dl[i] = f;
            b[i + 1] -= f * b[i];
        }
    }
    if d[n - 1].abs() <= 1e-300 * scale {
        return None;
    }
    let mut x = b;
    x[n - 1] /= d[n - 1];
    if n >= 2 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}
