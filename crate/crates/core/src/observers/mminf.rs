use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::params::{ModelParams, Variant};

use super::quad;

const QUAD_TOL: f64 = 1e-14;

/// M/M/inf queue watched by a Poisson observer.
///
/// `P(x,y) = e^{rho(x-1)} e^{rho(y-1)} h(w)` with `w = (x-1)(y-1)` and
/// `h(w) = sum_k h_k w^k`, `h_k = nu / (nu + k mu) rho^k / k!`.
#[derive(Clone, Debug, PartialEq)]
pub struct MmInfObserverForm {
    pub params: ModelParams,
    /// `h_0, h_1, ...`, cut once the terms drop below `1e-17` past the peak.
    pub h: Vec<f64>,
}

impl MmInfObserverForm {
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        if p.variant != Variant::ObserverMMInf {
            return Err(Error::Domain(format!(
                "M/M/inf observer form called with variant {}",
                p.variant
            )));
        }
        let rho = p.lambda / p.mu;
        let mut h = Vec::new();
        let mut pk = 1.0; // rho^k / k!
        let mut k = 0usize;
        loop {
            let hk = p.nu / (p.nu + k as f64 * p.mu) * pk;
            h.push(hk);
            if k as f64 > rho && hk < 1e-17 {
                break;
            }
            k += 1;
            pk *= rho / k as f64;
            if k > 100_000 {
                return Err(Error::NoConvergence("observer series did not decay".into()));
            }
        }
        Ok(MmInfObserverForm { params: *p, h })
    }

    fn rho(&self) -> f64 {
        self.params.lambda / self.params.mu
    }

    fn h_at(&self, w: f64) -> f64 {
        self.h.iter().rev().fold(0.0, |acc, hk| acc * w + hk)
    }

    fn h_prime_at(&self, w: f64) -> f64 {
        self.h
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, hk)| acc * w + k as f64 * hk)
    }
}

pub fn mminf_obs_pgf(f: &MmInfObserverForm, x: f64, y: f64) -> f64 {
    let rho = f.rho();
    (rho * (x - 1.0)).exp() * (rho * (y - 1.0)).exp() * f.h_at((x - 1.0) * (y - 1.0))
}

/// `d/dx P(x,y) = rho P + e^{rho(x-1)} e^{rho(y-1)} h'(w) (y - 1)`.
pub fn mminf_obs_pgf_dx(f: &MmInfObserverForm, x: f64, y: f64) -> f64 {
    let rho = f.rho();
    let w = (x - 1.0) * (y - 1.0);
    let e = (rho * (x - 1.0)).exp() * (rho * (y - 1.0)).exp();
    rho * e * f.h_at(w) + e * f.h_prime_at(w) * (y - 1.0)
}

/// Integral form `e^{rho(x-1)} e^{rho(y-1)} int_0^1 (nu/mu) u^{nu/mu-1} e^{rho u w} du`,
/// evaluated after `t = u^{nu/mu}` as `int_0^1 exp(rho w t^{mu/nu}) dt`.
pub fn mminf_obs_pgf_integral(p: &ModelParams, x: f64, y: f64) -> Result<f64> {
    p.validate()?;
    if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
        return Err(Error::Domain(format!("pgf needs (x, y) in [0,1]^2, got ({x}, {y})")));
    }
    let rho = p.lambda / p.mu;
    let w = (x - 1.0) * (y - 1.0);
    let alpha = p.mu / p.nu;
    let h = quad::integrate(|t| (rho * w * t.powf(alpha)).exp(), 0.0, 1.0, QUAD_TOL)?;
    Ok((rho * (x - 1.0)).exp() * (rho * (y - 1.0)).exp() * h)
}

fn poisson_pmf(mean: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len + 1);
    let mut v = (-mean).exp();
    for k in 0..=len {
        out.push(v);
        v *= mean / (k + 1) as f64;
    }
    out
}

/// Table of `pi[i][j]` for `i <= qmax`, `j <= jmax`.
///
/// Given the lag between the observation and now, a customer present at the
/// observation is still there with probability `p`, so the pair is
/// `(C + A, C + B)` with `C ~ Poisson(rho p)` and `A, B ~ Poisson(rho (1-p))`
/// independent. Averaging over the exponential lag is the integral
/// `int_0^1 (...)|_{p = t^{mu/nu}} dt`, done by adaptive quadrature on all
/// entries at once. Every term is non-negative, unlike the `(x-1)^k` series.
pub fn mminf_obs_joint(p: &ModelParams, qmax: usize, jmax: usize) -> Result<JointDist> {
    p.validate()?;
    if p.variant != Variant::ObserverMMInf {
        return Err(Error::Domain(format!(
            "M/M/inf observer table called with variant {}",
            p.variant
        )));
    }
    let rho = p.lambda / p.mu;
    let alpha = p.mu / p.nu;
    let width = jmax + 1;
    let n = qmax.max(jmax);
    let values = quad::integrate_vec(
        |t| {
            let keep = t.powf(alpha);
            let common = poisson_pmf(rho * keep, n);
            let fresh = poisson_pmf(rho * (1.0 - keep), n);
            let mut out = vec![0.0; (qmax + 1) * width];
            for i in 0..=qmax {
                for j in 0..=jmax {
                    out[i * width + j] = (0..=i.min(j)).map(|c| common[c] * fresh[i - c] * fresh[j - c]).sum();
                }
            }
            out
        },
        0.0,
        1.0,
        QUAD_TOL,
    )?;
    JointDist::from_fn(qmax, jmax, |i, j| values[i * width + j])
}

/// `|(nu + lambda (1-x)) P + mu (x-1) dP/dx - nu P(xy, 1)|`, with the analytic derivative.
pub fn mminf_obs_residual(f: &MmInfObserverForm, x: f64, y: f64) -> f64 {
    let p = &f.params;
    let rho = f.rho();
    let lhs = (p.nu + p.lambda * (1.0 - x)) * mminf_obs_pgf(f, x, y) + p.mu * (x - 1.0) * mminf_obs_pgf_dx(f, x, y);
    (lhs - p.nu * (rho * (x * y - 1.0)).exp()).abs()
}
