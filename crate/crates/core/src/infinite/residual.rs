//! How far a table is from solving the uncapped controller's functional
//! equation
//!
//! ```text
//! (nu + lambda (1 - x)) P(x,y) + mu y (1 - 1/x) d/dy [P(x,y) - P(0,y)] = nu P(xy, 1)
//! ```
//!
//! Both evaluation routes are finite sums over the table. The series route
//! folds `1 - 1/x` into the `i >= 1` terms; the balance route sums the
//! per-state balance violations weighted by `x^i y^j`, and is the one used
//! close to `x = 0`.

use crate::joint::JointDist;
use crate::params::ModelParams;

/// Below this `x` the balance-equation route is used.
pub const BALANCE_SWITCH: f64 = 0.05;

pub fn series_residual(d: &JointDist, p: &ModelParams, x: f64, y: f64) -> f64 {
    let (lam, mu, nu) = (p.lambda, p.mu, p.nu);
    let mut pxy = 0.0;
    let mut deriv_term = 0.0;
    let mut xprev = 0.0;
    let mut xpow = 1.0;
    for i in 0..=d.qmax() {
        let mut row = 0.0;
        let mut row_j = 0.0;
        let mut ypow = 1.0;
        for j in 0..=d.jmax() {
            let v = d.get(i, j);
            row += v * ypow;
            row_j += j as f64 * v * ypow;
            ypow *= y;
        }
        pxy += row * xpow;
        if i >= 1 {
            // y (1 - 1/x) d/dy y^j x^i = j y^j (x^i - x^(i-1))
            deriv_term += row_j * (xpow - xprev);
        }
        xprev = xpow;
        xpow *= x;
    }
    let gamma = d.queue_marginal();
    let xy = x * y;
    let diag = gamma.iter().rev().fold(0.0, |acc, g| acc * xy + g);
    ((nu + lam * (1.0 - x)) * pxy + mu * deriv_term - nu * diag).abs()
}

/// `|sum_{i,j} x^i y^j r_ij|`, where `r_ij` is the balance violation at `(i, j)`.
pub fn balance_residual(d: &JointDist, p: &ModelParams, x: f64, y: f64) -> f64 {
    let (lam, mu, nu) = (p.lambda, p.mu, p.nu);
    let gamma = d.queue_marginal();
    let mut total = 0.0;
    let mut xpow = 1.0;
    for i in 0..=d.qmax() + 1 {
        let mut ypow = 1.0;
        let mut row = 0.0;
        for j in 0..=d.jmax() {
            let jm = j as f64 * mu;
            let out = (lam + nu + if i >= 1 { jm } else { 0.0 }) * d.get(i, j);
            let inflow = if i >= 1 { lam * d.get(i - 1, j) } else { 0.0 }
                + jm * d.get(i + 1, j)
                + if i == j {
                    nu * gamma.get(i).copied().unwrap_or(0.0)
                } else {
                    0.0
                };
            row += (out - inflow) * ypow;
            ypow *= y;
        }
        total += row * xpow;
        xpow *= x;
    }
    total.abs()
}

/// Largest residual over `grid`, switching to the balance route for `x < 0.05`.
pub fn functional_eq_residual(d: &JointDist, p: &ModelParams, grid: &[(f64, f64)]) -> f64 {
    grid.iter()
        .map(|&(x, y)| {
            if x < BALANCE_SWITCH {
                balance_residual(d, p, x, y)
            } else {
                series_residual(d, p, x, y)
            }
        })
        .fold(0.0, f64::max)
}
