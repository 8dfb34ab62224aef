//! Slow-control limit of the capped controller.
//!
//! Time is measured in units of `1/nu`. A speed `j` with `j mu < lambda`
//! (set `S-`) lets the queue grow on the fluid scale until the next
//! inspection, which then necessarily sets the speed to `smax`; the fluid
//! drains at rate `smax mu - lambda` (state `smax_f`), after which the queue is
//! back on the normal scale and the speed moves within `S+` until some
//! inspection sees a short enough queue to land in `S-` again.
//!
//! States are indexed `0..=smax`, with `smax + 1` standing for `smax_f`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::ModelParams;

use super::QbdSolution;

/// Embedded chain of the slow-control limit and the speed marginal it gives.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidCycle {
    pub smax: usize,
    /// Speeds with `j mu < lambda`, increasing.
    pub sminus: Vec<usize>,
    /// Speeds with `j mu > lambda`, increasing; always ends with `smax`.
    pub splus: Vec<usize>,
    /// Transition matrix over `0..=smax+1`, row-major.
    pub m: Vec<Vec<f64>>,
    /// `b (I - V)^-1`, indexed like `splus`.
    pub theta: Vec<f64>,
    pub kappa: f64,
    pub psi: Vec<f64>,
    pub tau: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl FluidCycle {
    pub fn fluid_index(&self) -> usize {
        self.smax + 1
    }

    /// Largest entry of `psi M - psi`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.psi.len();
        (0..n)
            .map(|j| {
                let inflow: f64 = (0..n).map(|i| self.psi[i] * self.m[i][j]).sum();
                (inflow - self.psi[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Expected fraction of the service capacity in use, in units of `mu`:
    /// saturated in `S-` and `smax_f`, `rho_j` busy in `S+`. Equals `rho`.
    pub fn utilization(&self, p: &ModelParams) -> f64 {
        let rho = p.lambda / p.mu;
        let fluid: f64 = self.sminus.iter().map(|&j| j as f64 * self.sigma[j]).sum();
        let normal: f64 = self.splus.iter().map(|&j| rho * self.sigma[j]).sum();
        fluid + self.smax as f64 * self.sigma[self.fluid_index()] + normal
    }
}

fn check_boundary(p: &ModelParams, smax: usize) -> Result<()> {
    let tol = 1e-12 * p.lambda.max(1.0);
    for j in 0..=smax {
        let speed = j as f64 * p.mu;
        if (speed - p.lambda).abs() <= tol {
            return Err(Error::BoundarySpeed { speed: j });
        }
    }
    Ok(())
}

pub fn fluid_cycle(p: &ModelParams) -> Result<FluidCycle> {
    p.validate()?;
    let s = p.smax_finite()?;
    check_boundary(p, s)?;
    let (lam, mu) = (p.lambda, p.mu);
    let sminus: Vec<usize> = (0..=s).filter(|&j| (j as f64) * mu < lam).collect();
    let splus: Vec<usize> = (0..=s).filter(|&j| (j as f64) * mu > lam).collect();
    let f = s + 1;
    let n = s + 2;
    let mut m = vec![vec![0.0; n]; n];
    for &j in &sminus {
        m[j][f] = 1.0;
    }
    for &i in &splus {
        let ri = lam / (i as f64 * mu);
        for j in 0..s {
            m[i][j] = (1.0 - ri) * ri.powi(j as i32);
        }
        m[i][s] = ri.powi(s as i32);
    }
    m[f][s] = 1.0;

    // theta (I - V) = b, with V the S+ -> S+ block and b = e_smax
    let k = splus.len();
    let i_minus_v_t = DMatrix::from_fn(k, k, |r, c| {
        let (from, to) = (splus[c], splus[r]);
        (if r == c { 1.0 } else { 0.0 }) - m[from][to]
    });
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let theta: Vec<f64> = i_minus_v_t
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("I - V is singular".into()))?
        .iter()
        .copied()
        .collect();
    let kappa: f64 = theta.iter().sum();
    // theta V0, the entry law into S-
    let entry: Vec<f64> = sminus
        .iter()
        .map(|&j| splus.iter().zip(&theta).map(|(&i, t)| t * m[i][j]).sum())
        .collect();

    let mut psi = vec![0.0; n];
    for (&j, e) in sminus.iter().zip(&entry) {
        psi[j] = e / (2.0 + kappa);
    }
    for (&i, t) in splus.iter().zip(&theta) {
        psi[i] = t / (2.0 + kappa);
    }
    psi[f] = 1.0 / (2.0 + kappa);

    let drained: f64 = sminus.iter().zip(&entry).map(|(&j, e)| j as f64 * e).sum();
    let tau_f = (lam - mu * drained) / (s as f64 * mu - lam);
    let mut tau = vec![1.0; n];
    tau[f] = tau_f;
    let weights: Vec<f64> = tau.iter().zip(&psi).map(|(t, q)| t * q).collect();
    let z: f64 = weights.iter().sum();
    let sigma = weights.iter().map(|w| w / z).collect();

    let fc = FluidCycle {
        smax: s,
        sminus,
        splus,
        m,
        theta,
        kappa,
        psi,
        tau,
        sigma,
    };
    let res = fc.stationarity_residual();
    if res > 1e-12 {
        return Err(Error::SingularSystem(format!("embedded chain residual {res:e}")));
    }
    Ok(fc)
}

/// Slow-control pgfs `(P_hat, P_tilde)`: `P_hat` sees the queue on the fluid
/// scale, `P_tilde` on the normal scale.
///
/// ```text
/// P_hat(x,y)   = sum_{S-} sigma_j / (1 - (lambda - j mu) ln x) (y^j + (lambda - j mu)/(s mu - lambda) y^s)
///              + sum_{S+} sigma_j y^j
/// P_tilde(x,y) = sum_{S+} sigma_j y^j (1 - rho_j) / (1 - rho_j x)
/// ```
pub fn fluid_pgfs(fc: &FluidCycle, p: &ModelParams, x: f64, y: f64) -> Result<(f64, f64)> {
    if !(x > 0.0 && x <= 1.0 && y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(format!(
            "fluid pgfs need (x, y) in (0,1]^2, got ({x}, {y})"
        )));
    }
    let (lam, mu) = (p.lambda, p.mu);
    let s = fc.smax;
    let ys = y.powi(s as i32);
    let lx = x.ln();
    let mut hat = 0.0;
    for &j in &fc.sminus {
        let drift = lam - j as f64 * mu;
        let drain = drift / (s as f64 * mu - lam);
        hat += fc.sigma[j] / (1.0 - drift * lx) * (y.powi(j as i32) + drain * ys);
    }
    let mut tilde = 0.0;
    for &j in &fc.splus {
        let yj = y.powi(j as i32);
        let rj = lam / (j as f64 * mu);
        hat += fc.sigma[j] * yj;
        tilde += fc.sigma[j] * yj * (1.0 - rj) / (1.0 - rj * x);
    }
    Ok((hat, tilde))
}

/// Queue length above which a finite-`nu` state counts as fluid scale:
/// `ceil(nu^(-1/2))`.
pub fn scale_threshold(nu: f64) -> usize {
    nu.powf(-0.5).ceil() as usize
}

/// Speed marginal of a finite-`nu` solution laid out like
/// [`FluidCycle::sigma`]: top-speed mass with `Q` above [`scale_threshold`]
/// goes to the `smax_f` slot.
pub fn scale_split(sol: &QbdSolution) -> Vec<f64> {
    let s = sol.smax();
    let k = scale_threshold(sol.params.nu);
    let mut out = sol.speed_marginal();
    let fluid = sol.tail_by_phase(k)[s];
    out[s] -= fluid;
    out.push(fluid);
    out
}
