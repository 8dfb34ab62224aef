//! Controller with no cap on the speed.
//!
//! The joint law factors as `pi[i][j] = sigma_j * p_j(i)`: the speed marginal
//! `sigma` times the conditional queue-length law given the speed. The
//! conditional laws are explicit (see [`cond_dist`]); the speed marginal solves
//! the balance equations of the speed sampled at control instants
//! ([`sigma_solve`]). Because Poisson inspections see time averages, that
//! marginal is also the queue-length marginal.

mod limits;
mod residual;
mod sigma;

pub use limits::{conjecture_pgf, limit_nu_inf};
pub use residual::{balance_residual, functional_eq_residual, series_residual};
pub use sigma::{
    assemble_joint, initial_truncation, sigma_solve, sigma_solve_from, solve, InfiniteSolution, SigmaVector,
};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Roots attached to speed `j`.
///
/// `beta` is the root in `[0, 1)` of `lambda z^2 - (lambda + nu + j mu) z + j mu`,
/// the probability that an M/M/1(lambda, j mu) busy period ends before an
/// independent exp(nu) clock rings. `beta_tilde = lambda * beta / (j mu)` is the
/// reciprocal of the other root.
///
/// For `j = 0` the quadratic degenerates; `beta = 0` and `beta_tilde` takes its
/// limit `lambda / (lambda + nu)`, which makes the `j >= 1` formulas cover the
/// zero-speed geometric law too.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaPair {
    pub j: usize,
    pub beta: f64,
    pub beta_tilde: f64,
}

impl BetaPair {
    /// Value of the defining quadratic at `beta`.
    pub fn quadratic_residual(&self, p: &ModelParams) -> f64 {
        let jm = self.j as f64 * p.mu;
        p.lambda * self.beta * self.beta - (p.lambda + p.nu + jm) * self.beta + jm
    }
}

pub fn beta_j(p: &ModelParams, j: usize) -> BetaPair {
    let (lam, nu) = (p.lambda, p.nu);
    if j == 0 {
        return BetaPair {
            j,
            beta: 0.0,
            beta_tilde: lam / (lam + nu),
        };
    }
    let jm = j as f64 * p.mu;
    let b = lam + jm + nu;
    let disc = b * b - 4.0 * lam * jm;
    // (lam - jm)^2 + nu^2 + 2 nu (lam + jm) >= 0
    assert!(disc >= 0.0, "negative discriminant {disc}");
    // conjugate form of the smaller root, no cancellation when nu >> j mu
    let beta = 2.0 * jm / (b + disc.sqrt());
    BetaPair {
        j,
        beta,
        beta_tilde: lam * beta / jm,
    }
}

/// Conditional queue-length law given speed `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CondDist {
    pub j: usize,
    pub beta: BetaPair,
    /// `c_{0,j} ..= c_{j,j}`; all higher coefficients vanish.
    pub coeffs: Vec<f64>,
    /// `p_j(0) ..= p_j(L)`.
    pub pmf: Vec<f64>,
}

impl CondDist {
    /// Mass beyond the stored length. The pmf is geometric with ratio
    /// `beta_tilde` past `j`, so this is exact.
    pub fn tail_mass(&self) -> f64 {
        let last = *self.pmf.last().expect("pmf is never empty");
        let bt = self.beta.beta_tilde;
        last * bt / (1.0 - bt)
    }

    pub fn mean_truncated(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(l, p)| l as f64 * p).sum()
    }
}

/// Coefficients `c_{k,j}` of the numerator polynomial of the conditional pgf.
pub fn coeffs(beta: f64, j: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(j + 1);
    c.push(beta.powi(j as i32) / (1.0 - beta));
    for k in 1..=j {
        c.push(beta.powi((j - k) as i32));
    }
    c
}

/// `p_j(0..=len)`, the stationary conditional law of the queue length given
/// speed `j`.
pub fn cond_dist(p: &ModelParams, j: usize, len: usize) -> Result<CondDist> {
    if len < j {
        return Err(Error::LengthTooShort {
            length: len,
            minimum: j,
        });
    }
    let bp = beta_j(p, j);
    let c = coeffs(bp.beta, j);
    let bt = bp.beta_tilde;
    let scale = p.nu * bt / p.lambda;
    let mut pmf = Vec::with_capacity(len + 1);
    // a_l = sum_{k <= l} c_k bt^(l-k)
    let mut a = 0.0;
    for l in 0..=len {
        a = a * bt + c.get(l).copied().unwrap_or(0.0);
        pmf.push(scale * a);
    }
    Ok(CondDist {
        j,
        beta: bp,
        coeffs: c,
        pmf,
    })
}

/// `sum_k c_{k,j}` in closed form.
pub fn sum_coeffs(beta: f64) -> f64 {
    1.0 / (1.0 - beta)
}

/// `sum_k k c_{k,j}` in closed form.
pub fn sum_k_coeffs(beta: f64, j: usize) -> f64 {
    let jf = j as f64;
    (jf - (jf + 1.0) * beta + beta.powi(j as i32 + 1)) / ((1.0 - beta) * (1.0 - beta))
}

/// Mean queue length given speed `j`.
pub fn cond_mean(p: &ModelParams, j: usize) -> f64 {
    if j == 0 {
        return p.lambda / p.nu;
    }
    let bp = beta_j(p, j);
    let bt = bp.beta_tilde;
    let sc = sum_coeffs(bp.beta);
    let skc = sum_k_coeffs(bp.beta, j);
    p.nu * bt / p.lambda * (bt * sc / ((1.0 - bt) * (1.0 - bt)) + skc / (1.0 - bt))
}
