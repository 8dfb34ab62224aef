//! One entry point per quantity, dispatching on the variant.

use crate::error::{Error, Result};
use crate::infinite;
use crate::joint::JointDist;
use crate::observers::{
    mm1_obs_joint, mm1_obs_pgf, mminf_obs_joint, mminf_obs_pgf, Mm1ObserverForm, MmInfObserverForm,
};
use crate::params::{ModelParams, Variant};
use crate::qbd;

/// Steady-state means and the empty-queue probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean_queue: f64,
    pub mean_speed: f64,
    pub prob_empty: f64,
}

pub fn summary(p: &ModelParams) -> Result<Summary> {
    p.validate()?;
    let rho = p.lambda / p.mu;
    Ok(match p.variant {
        Variant::ControllerInfinite => {
            let s = infinite::solve(p)?;
            Summary {
                mean_queue: s.mean_queue(),
                mean_speed: s.mean_speed(),
                prob_empty: s.joint.prob_empty(),
            }
        }
        Variant::ControllerFinite => {
            let s = qbd::solve_boundary(p)?;
            Summary {
                mean_queue: s.mean_queue(),
                mean_speed: s.mean_speed(),
                prob_empty: s.prob_empty(),
            }
        }
        // the observer does not act on the queue, and S has the law of Q
        Variant::ObserverMM1 => Summary {
            mean_queue: rho / (1.0 - rho),
            mean_speed: rho / (1.0 - rho),
            prob_empty: 1.0 - rho,
        },
        Variant::ObserverMMInf => Summary {
            mean_queue: rho,
            mean_speed: rho,
            prob_empty: (-rho).exp(),
        },
    })
}

/// Table over `i <= qmax`; the speed range is `smax` for the capped model and
/// `qmax` otherwise (the speed truncation `N` for the uncapped controller).
pub fn joint_at(p: &ModelParams, qmax: usize) -> Result<JointDist> {
    p.validate()?;
    match p.variant {
        Variant::ControllerInfinite => {
            let sigma = infinite::sigma_solve(p)?;
            infinite::assemble_joint(p, &sigma, qmax)
        }
        Variant::ControllerFinite => qbd::solve_boundary(p)?.to_joint(qmax),
        Variant::ObserverMM1 => mm1_obs_joint(p, qmax, qmax),
        Variant::ObserverMMInf => mminf_obs_joint(p, qmax, qmax),
    }
}

fn poisson_cut(rho: f64, tol: f64) -> usize {
    let mut w = (-rho).exp();
    let mut cum = w;
    let mut n = 0usize;
    while (n as f64) < rho || 1.0 - cum >= tol {
        n += 1;
        w *= rho / n as f64;
        cum += w;
        if w == 0.0 && n as f64 > rho {
            break;
        }
    }
    n
}

/// Smallest convenient table whose missing mass is below `tol`.
pub fn joint_tol(p: &ModelParams, tol: f64) -> Result<JointDist> {
    p.validate()?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let rho = p.lambda / p.mu;
    match p.variant {
        Variant::ControllerInfinite => {
            let sigma = infinite::sigma_solve(p)?;
            let mut len = sigma.n;
            loop {
                let d = infinite::assemble_joint(p, &sigma, len)?;
                if d.mass_deficit() < tol || len > 1 << 16 {
                    return Ok(d);
                }
                len *= 2;
            }
        }
        Variant::ControllerFinite => qbd::solve_boundary(p)?.to_joint_tol(tol),
        Variant::ObserverMM1 => {
            let n = ((0.5 * tol).ln() / rho.ln()).ceil().max(1.0) as usize;
            mm1_obs_joint(p, n, n)
        }
        Variant::ObserverMMInf => {
            let n = poisson_cut(rho, 0.5 * tol);
            mminf_obs_joint(p, n, n)
        }
    }
}

/// `E[x^Q y^S]` for `(x, y)` in `[0,1]^2`; closed forms where the model has
/// one, a table with missing mass below `1e-14` for the uncapped controller.
pub fn pgf(p: &ModelParams, x: f64, y: f64) -> Result<f64> {
    p.validate()?;
    if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
        return Err(Error::Domain(format!("pgf needs (x, y) in [0,1]^2, got ({x}, {y})")));
    }
    match p.variant {
        Variant::ControllerInfinite => Ok(joint_tol(p, 1e-14)?.pgf_eval(x, y)?.value),
        Variant::ControllerFinite => Ok(qbd::qbd_to_pgf(&qbd::solve_boundary(p)?, x, y)),
        Variant::ObserverMM1 => mm1_obs_pgf(&Mm1ObserverForm::new(p)?, x, y),
        Variant::ObserverMMInf => Ok(mminf_obs_pgf(&MmInfObserverForm::new(p)?, x, y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_meet_tolerance() {
        for p in [
            ModelParams::infinite(1.0, 1.0, 1.0),
            ModelParams::finite(1.0, 1.0, 1.0, 2),
            ModelParams::observer_mm1(1.0, 2.0, 1.0),
            ModelParams::observer_mminf(2.0, 1.0, 0.5),
        ] {
            let d = joint_tol(&p, 1e-12).unwrap();
            assert!(d.mass_deficit() < 1e-12, "{p:?}: {:e}", d.mass_deficit());
            let s = summary(&p).unwrap();
            assert!((d.mean_queue() - s.mean_queue).abs() < 1e-8, "{p:?}");
            assert!((d.mean_speed() - s.mean_speed).abs() < 1e-8, "{p:?}");
            assert!((d.prob_empty() - s.prob_empty).abs() < 1e-12, "{p:?}");
            let z = pgf(&p, 0.3, 0.6).unwrap();
            assert!((d.pgf_eval(0.3, 0.6).unwrap().value - z).abs() < 1e-11, "{p:?}");
        }
    }

    #[test]
    fn poisson_cut_tail() {
        let n = poisson_cut(3.0, 1e-12);
        assert!(n > 3 && n < 40);
    }
}
