use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::params::ModelParams;

use super::rmatrix::geom_diff;

/// Explicit stationary law for `smax = 1`.
///
/// With `a = lambda / mu` and `b = lambda / (lambda + nu)`:
///
/// ```text
/// pi[n][0] = b^n pi00
/// pi[n][1] = (lambda/nu) a^n pi00 + a (a^n - b^n) / (a - b) pi00
/// pi00     = nu (mu - lambda) / (mu (2 lambda + nu))
/// ```
///
/// The second term is the usual `c (a^n - b^n)` mixture with
/// `c = (lambda + nu) / (lambda + nu - mu)` rewritten via `c (a - b) = a`, so
/// nothing blows up when `lambda + nu = mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct S1ClosedForm {
    pub params: ModelParams,
    pub pi00: f64,
    pub a: f64,
    pub b: f64,
}

pub fn closed_form_s1(p: &ModelParams) -> Result<S1ClosedForm> {
    p.validate()?;
    if p.smax_finite()? != 1 {
        return Err(Error::Domain(format!("closed form needs smax = 1, got {}", p.smax)));
    }
    let (lam, mu, nu) = (p.lambda, p.mu, p.nu);
    Ok(S1ClosedForm {
        params: *p,
        pi00: nu * (mu - lam) / (mu * (2.0 * lam + nu)),
        a: lam / mu,
        b: lam / (lam + nu),
    })
}

impl S1ClosedForm {
    pub fn pi(&self, n: usize, j: usize) -> f64 {
        let p = &self.params;
        match j {
            0 => self.b.powi(n as i32) * self.pi00,
            1 => {
                let ratio = p.lambda / p.nu;
                (ratio * self.a.powi(n as i32) + self.a * geom_diff(self.a, self.b, n)) * self.pi00
            }
            _ => 0.0,
        }
    }

    /// `[P(S = 0), P(S = 1)]`.
    pub fn speed_marginal(&self) -> [f64; 2] {
        let (lam, mu, nu) = (self.params.lambda, self.params.mu, self.params.nu);
        let d = mu * (2.0 * lam + nu);
        [(mu - lam) * (lam + nu) / d, lam * (lam + mu + nu) / d]
    }

    /// `pi00 [1/(1 - b x) + y ((lambda/nu)/(1 - a x) + a x / ((1 - a x)(1 - b x)))]`.
    pub fn pgf(&self, x: f64, y: f64) -> f64 {
        let ratio = self.params.lambda / self.params.nu;
        let ga = 1.0 / (1.0 - self.a * x);
        let gb = 1.0 / (1.0 - self.b * x);
        self.pi00 * (gb + y * (ratio * ga + self.a * x * ga * gb))
    }

    pub fn to_joint(&self, qmax: usize) -> Result<JointDist> {
        JointDist::from_fn(qmax, 1, |n, j| self.pi(n, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_values() {
        let c = closed_form_s1(&ModelParams::finite(1.0, 2.0, 1.0, 1)).unwrap();
        assert!((c.pi00 - 1.0 / 6.0).abs() < 1e-16);
        let [s0, s1] = c.speed_marginal();
        assert!((s0 + s1 - 1.0).abs() < 1e-15);
        assert!((c.pi(0, 1) - c.pi00).abs() < 1e-16);
        assert!((c.pgf(1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_unregularized_form_away_from_singularity() {
        let (lam, mu, nu) = (1.0, 3.0, 0.7);
        let c = closed_form_s1(&ModelParams::finite(lam, mu, nu, 1)).unwrap();
        let k = (lam + nu) / (lam + nu - mu);
        for n in 0..15 {
            let a = (lam / mu).powi(n);
            let b = (lam / (lam + nu)).powi(n);
            let plain = ((lam / nu + k) * a - k * b) * c.pi00;
            assert!((c.pi(n as usize, 1) - plain).abs() < 1e-14);
        }
        let (x, y) = (0.6, 0.3);
        let gb = (lam + nu) / (nu + lam * (1.0 - x));
        let plain_pgf = c.pi00 * (gb - k * gb * y + (lam / nu + k) * mu / (mu - lam * x) * y);
        assert!((c.pgf(x, y) - plain_pgf).abs() < 1e-13);
    }

    #[test]
    fn rejects_other_caps() {
        assert!(closed_form_s1(&ModelParams::finite(1.0, 2.0, 1.0, 2)).is_err());
    }
}
