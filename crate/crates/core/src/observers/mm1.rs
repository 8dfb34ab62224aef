use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::params::{ModelParams, Variant};

/// M/M/1 queue watched by a Poisson observer that records the queue length.
///
/// `x1` is the root in `(0, 1)` of `lambda x^2 - (lambda + mu + nu) x + mu`,
/// `x2 = mu / (lambda x1)` the other one. Dividing numerator and denominator of
/// the textbook solution by `x - x1` gives
///
/// ```text
/// P(x, y) = nu (mu - lambda) / (lambda (x2 - x) (mu - lambda x1 y))
///           * (mu / (mu - lambda x y) + x1 / (1 - x1))
/// ```
///
/// which is regular on all of `[0, 1]^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mm1ObserverForm {
    pub params: ModelParams,
    pub x1: f64,
}

impl Mm1ObserverForm {
    pub fn new(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        if p.variant != Variant::ObserverMM1 {
            return Err(Error::Domain(format!(
                "M/M/1 observer form called with variant {}",
                p.variant
            )));
        }
        let (lam, mu, nu) = (p.lambda, p.mu, p.nu);
        let b = lam + mu + nu;
        let x1 = 2.0 * mu / (b + (b * b - 4.0 * lam * mu).sqrt());
        Ok(Mm1ObserverForm { params: *p, x1 })
    }

    pub fn x2(&self) -> f64 {
        self.params.mu / (self.params.lambda * self.x1)
    }

    pub fn quadratic_residual(&self) -> f64 {
        let p = &self.params;
        let x = self.x1;
        p.lambda * x * x - (p.lambda + p.mu + p.nu) * x + p.mu
    }

    /// `lambda x1 / mu = 1 / x2`, the geometric ratio in both coordinates.
    pub fn ratio(&self) -> f64 {
        self.params.lambda * self.x1 / self.params.mu
    }

    /// `pi[i][j] = C (a^|i-j| T_min(i,j) + x1/(1-x1) a^(i+j))` with
    /// `T_n = sum_{k<=n} a^(2(n-k)) rho^k` and `C = nu (mu - lambda) a / (lambda mu)`.
    pub fn pi(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (i.min(j), i.max(j));
        let a = self.ratio();
        let t = t_sum(a, self.params.lambda / self.params.mu, lo);
        self.scale() * (a.powi((hi - lo) as i32) * t + self.x1 / (1.0 - self.x1) * a.powi((i + j) as i32))
    }

    fn scale(&self) -> f64 {
        let p = &self.params;
        p.nu * (p.mu - p.lambda) * self.ratio() / (p.lambda * p.mu)
    }
}

/// `T_n = sum_{k=0}^n a^(2(n-k)) rho^k` by the recurrence `T_n = a^2 T_{n-1} + rho^n`.
fn t_sum(a: f64, rho: f64, n: usize) -> f64 {
    let mut t = 0.0;
    let mut rk = 1.0;
    for _ in 0..=n {
        t = a * a * t + rk;
        rk *= rho;
    }
    t
}

pub fn mm1_obs_pgf(f: &Mm1ObserverForm, x: f64, y: f64) -> Result<f64> {
    if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
        return Err(Error::Domain(format!("pgf needs (x, y) in [0,1]^2, got ({x}, {y})")));
    }
    let p = &f.params;
    let (lam, mu, nu) = (p.lambda, p.mu, p.nu);
    let x1 = f.x1;
    let lead = nu * (mu - lam) / (lam * (f.x2() - x) * (mu - lam * x1 * y));
    Ok(lead * (mu / (mu - lam * x * y) + x1 / (1.0 - x1)))
}

/// Table of `pi[i][j]` for `i <= qmax`, `j <= jmax`.
pub fn mm1_obs_joint(p: &ModelParams, qmax: usize, jmax: usize) -> Result<JointDist> {
    let f = Mm1ObserverForm::new(p)?;
    JointDist::from_fn(qmax, jmax, |i, j| f.pi(i, j))
}

/// `|[nu + lambda (1-x) + mu (1 - 1/x)] P(x,y) - mu (1 - 1/x) P(0,y) - nu P(xy,1)|`
/// for `x` in `(0, 1]`, computed from the closed form.
pub fn mm1_obs_residual(f: &Mm1ObserverForm, x: f64, y: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::Domain("residual needs x > 0".into()));
    }
    let p = &f.params;
    let (lam, mu, nu) = (p.lambda, p.mu, p.nu);
    let k = 1.0 - 1.0 / x;
    let lhs = (nu + lam * (1.0 - x) + mu * k) * mm1_obs_pgf(f, x, y)?;
    let rhs = mu * k * mm1_obs_pgf(f, 0.0, y)? + nu * (mu - lam) / (mu - lam * x * y);
    Ok((lhs - rhs).abs())
}
