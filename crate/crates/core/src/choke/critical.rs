//! Critical (choked) throat pressure ratio.
//!
//! The ratio is the fixed point of
//!
//! ```text
//!          k/(k-1) + a (1 - y) / v_g1
//! y = -----------------------------------------------,   a = (1 - x) v_l / x
//!     k/(k-1) + n/2 + n a / v_g2 + (n/2) (a / v_g2)^2     v_g2 = v_g1 y^(-1/k)
//! ```
//!
//! solved by damped iteration with a bisection fallback.

use crate::error::{Error, Result};

/// Right-hand side of the fixed-point equation.
fn fixed_point_map(y: f64, x_g: f64, v_g1: f64, v_l: f64, k: f64, n: f64) -> f64 {
    let kk = k / (k - 1.0);
    let a = (1.0 - x_g) * v_l / x_g;
    let v_g2 = v_g1 * y.powf(-1.0 / k);
    let b = a / v_g2;
    let num = kk + a * (1.0 - y) / v_g1;
    let den = kk + 0.5 * n + n * b + 0.5 * n * b * b;
    num / den
}

/// `g(y) - y`; zero at the critical ratio.
pub fn critical_residual(y: f64, x_g: f64, v_g1: f64, v_l: f64, k: f64, n: f64) -> f64 {
    fixed_point_map(y, x_g, v_g1, v_l, k, n) - y
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalSolver {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub start: f64,
}

impl Default for CriticalSolver {
    fn default() -> Self {
        CriticalSolver { tolerance: 1e-8, max_iterations: 200, start: 0.5 }
    }
}

impl CriticalSolver {
    pub fn solve(&self, x_g: f64, v_g1: f64, v_l: f64, k: f64, n: f64) -> Result<f64> {
        if !(x_g > 0.0 && x_g <= 1.0) {
            return Err(Error::input("x_g", format!("gas fraction {x_g} outside (0, 1]")));
        }
        if !(v_g1 > 0.0 && v_l > 0.0) {
            return Err(Error::input("v", "specific volumes must be positive"));
        }
        if !(k > 1.0 && n > 1.0) {
            return Err(Error::input("k", "exponents must exceed 1"));
        }

        let residual = |y: f64| critical_residual(y, x_g, v_g1, v_l, k, n);

        let mut y = self.start;
        for _ in 0..self.max_iterations {
            let r = residual(y);
            if !r.is_finite() {
                break;
            }
            if r.abs() < self.tolerance && y > 0.0 && y < 1.0 {
                return Ok(y);
            }
            y += 0.5 * r;
        }

        // Residual is positive as y -> 0 and negative at y = 1.
        let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
        if !(residual(lo) > 0.0 && residual(hi) < 0.0) {
            return Err(Error::NoConvergence { iterations: self.max_iterations, last: y });
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let r = residual(mid);
            if r.abs() < self.tolerance && hi - lo < self.tolerance {
                return Ok(mid);
            }
            if r > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if residual(mid).abs() < self.tolerance {
            Ok(mid)
        } else {
            Err(Error::NoConvergence { iterations: self.max_iterations + 200, last: mid })
        }
    }
}

pub fn critical_pressure_ratio(x_g: f64, v_g1: f64, v_l: f64, k: f64, n: f64) -> Result<f64> {
    CriticalSolver::default().solve(x_g, v_g1, v_l, k, n)
}
