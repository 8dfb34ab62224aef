//! Brute-force ground truth.
//!
//! Every model variant is a continuous-time Markov chain on (queue length,
//! speed). Truncating the queue at `qmax` leaves a finite chain whose
//! stationary law can be computed directly; the closed forms elsewhere in the
//! crate are checked against it.
//!
//! Truncation drops arrivals in level `qmax` (the chain reflects there). The
//! speed dimension needs no cut of its own: the finite controller never
//! exceeds `smax`, and in the other variants the speed is a past queue length,
//! so it never exceeds `qmax` either.

pub mod gth;

use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::params::{ModelParams, SpeedProfile, Variant};

use gth::{BandMatrix, Transition};

/// Boundary mass allowed before a truncation is declared too small.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Band storage above this many cells falls back to power iteration.
const BAND_CELL_LIMIT: usize = 40_000_000;

/// A truncated chain, states enumerated row-major in the queue length.
#[derive(Clone, Debug)]
pub struct TruncatedChain {
    pub params: ModelParams,
    pub qmax: usize,
    pub jmax: usize,
    pub transitions: Vec<Transition>,
}

impl TruncatedChain {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.jmax + 1) + j
    }

    pub fn n_states(&self) -> usize {
        (self.qmax + 1) * (self.jmax + 1)
    }

    pub fn bandwidth(&self) -> usize {
        self.transitions
            .iter()
            .map(|t| t.from.abs_diff(t.to))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    /// Banded GTH when it fits in memory, power iteration otherwise.
    Auto,
    Direct,
    PowerIteration,
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub dist: JointDist,
    /// `max |(pi G)_k|` of the computed vector.
    pub residual: f64,
    /// Probability of the truncation level `qmax`.
    pub boundary_mass: f64,
}

impl OracleSolution {
    pub fn check_truncation(self, tol: f64) -> Result<Self> {
        if self.boundary_mass > tol {
            return Err(Error::TruncationTooSmall {
                boundary_mass: self.boundary_mass,
                tolerance: tol,
            });
        }
        Ok(self)
    }
}

/// Builds the truncated generator of `p`'s variant.
pub fn build_chain(p: &ModelParams, qmax: usize) -> Result<TruncatedChain> {
    match p.variant {
        Variant::ControllerFinite => {
            let profile = SpeedProfile::linear(p.mu, p.smax_finite()?);
            build_chain_with_profile(p, qmax, &profile)
        }
        _ => build(p, qmax, None),
    }
}

/// Finite-speed controller with an arbitrary increasing service profile.
pub fn build_chain_with_profile(p: &ModelParams, qmax: usize, profile: &SpeedProfile) -> Result<TruncatedChain> {
    if p.variant != Variant::ControllerFinite {
        return Err(Error::Domain(
            "speed profiles apply to the finite controller only".into(),
        ));
    }
    if profile.smax() != p.smax_finite()? {
        return Err(Error::Domain(format!(
            "profile covers speeds 0..={} but smax is {}",
            profile.smax(),
            p.smax
        )));
    }
    build(p, qmax, Some(profile))
}

fn build(p: &ModelParams, qmax: usize, profile: Option<&SpeedProfile>) -> Result<TruncatedChain> {
    p.validate_for_simulation()?;
    let jmax = match p.variant {
        Variant::ControllerFinite => p.smax_finite()?,
        _ => qmax,
    };
    if qmax < jmax.max(1) {
        return Err(Error::LengthTooShort {
            length: qmax,
            minimum: jmax.max(1),
        });
    }
    let mut chain = TruncatedChain {
        params: *p,
        qmax,
        jmax,
        transitions: Vec::with_capacity((qmax + 1) * (jmax + 1) * 3),
    };
    for i in 0..=qmax {
        for j in 0..=jmax {
            let from = chain.index(i, j);
            let mut push = |ti: usize, tj: usize, rate: f64| {
                if rate > 0.0 {
                    let to = i_j(ti, tj, jmax);
                    chain.transitions.push(Transition { from, to, rate });
                }
            };
            if i < qmax {
                push(i + 1, j, p.lambda);
            }
            if i > 0 {
                let departure = match p.variant {
                    Variant::ControllerInfinite => j as f64 * p.mu,
                    Variant::ControllerFinite => profile.map_or(j as f64 * p.mu, |s| s.rate(j)),
                    Variant::ObserverMM1 => p.mu,
                    Variant::ObserverMMInf => i as f64 * p.mu,
                };
                push(i - 1, j, departure);
            }
            let target = match p.variant {
                Variant::ControllerFinite => i.min(jmax),
                _ => i,
            };
            if target != j {
                push(i, target, p.nu);
            }
        }
    }
    Ok(chain)
}

#[inline]
fn i_j(i: usize, j: usize, jmax: usize) -> usize {
    i * (jmax + 1) + j
}

pub fn stationary(chain: &TruncatedChain) -> Result<OracleSolution> {
    stationary_with(chain, SolveMethod::Auto)
}

/// Solves `pi G = 0`, `sum pi = 1` on the truncated chain.
pub fn stationary_with(chain: &TruncatedChain, method: SolveMethod) -> Result<OracleSolution> {
    let n = chain.n_states();
    let bw = chain.bandwidth();
    let direct_fits = n.saturating_mul(2 * bw + 1) <= BAND_CELL_LIMIT;
    let pi = match method {
        SolveMethod::Direct => direct(chain, n, bw)?,
        SolveMethod::Auto if direct_fits => direct(chain, n, bw)?,
        SolveMethod::Auto | SolveMethod::PowerIteration => {
            gth::power_iteration(n, &chain.transitions, 1e-13, 2_000_000)?
        }
    };
    let residual = gth::generator_residual(&pi, &chain.transitions);
    let boundary_mass = (0..=chain.jmax).map(|j| pi[chain.index(chain.qmax, j)]).sum();
    let dist = JointDist::from_fn(chain.qmax, chain.jmax, |i, j| pi[chain.index(i, j)])?;
    Ok(OracleSolution {
        dist,
        residual,
        boundary_mass,
    })
}

fn direct(chain: &TruncatedChain, n: usize, bw: usize) -> Result<Vec<f64>> {
    let mut band = BandMatrix::zeros(n, bw);
    for t in &chain.transitions {
        band.add(t.from, t.to, t.rate);
    }
    gth::gth_banded(&mut band)
}

/// Builds, solves and checks the truncation in one go.
pub fn solve(p: &ModelParams, qmax: usize) -> Result<OracleSolution> {
    let chain = build_chain(p, qmax)?;
    stationary(&chain)?.check_truncation(BOUNDARY_TOL)
}

/// Stationary law of the one-dimensional restart chain for speed `j`.
#[derive(Clone, Debug)]
pub struct ConditionalLaw {
    pub pmf: Vec<f64>,
    pub boundary_mass: f64,
}

impl ConditionalLaw {
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }
}

/// Queue length seen while the speed is `j`: an M/M/1 queue with arrival
/// rate `lambda` and service rate `j * mu` that jumps back to state `j` at
/// rate `nu`.
pub fn conditional_chain(p: &ModelParams, j: usize, qmax: usize) -> Result<ConditionalLaw> {
    p.validate_for_simulation()?;
    if j == 0 {
        return Err(Error::Domain("the restart chain needs speed j >= 1".into()));
    }
    if qmax <= j {
        return Err(Error::LengthTooShort {
            length: qmax,
            minimum: j + 1,
        });
    }
    let n = qmax + 1;
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        if i + 1 < n {
            a[i * n + i + 1] += p.lambda;
        }
        if i > 0 {
            a[i * n + i - 1] += j as f64 * p.mu;
        }
        if i != j {
            a[i * n + j] += p.nu;
        }
    }
    let pmf = gth::gth_dense(&mut a, n)?;
    let boundary_mass = pmf[qmax];
    if boundary_mass > BOUNDARY_TOL {
        return Err(Error::TruncationTooSmall {
            boundary_mass,
            tolerance: BOUNDARY_TOL,
        });
    }
    Ok(ConditionalLaw { pmf, boundary_mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has(chain: &TruncatedChain, from: (usize, usize), to: (usize, usize), rate: f64) -> bool {
        let (f, t) = (chain.index(from.0, from.1), chain.index(to.0, to.1));
        chain
            .transitions
            .iter()
            .any(|tr| tr.from == f && tr.to == t && (tr.rate - rate).abs() < 1e-15)
    }

    #[test]
    fn infinite_controller_jumps_to_diagonal() {
        let p = ModelParams::infinite(1.0, 1.0, 0.7);
        let c = build_chain(&p, 10).unwrap();
        assert!(has(&c, (4, 1), (4, 4), 0.7));
        assert!(has(&c, (4, 1), (3, 1), 1.0));
        assert!(has(&c, (4, 3), (3, 3), 3.0));
        assert!(has(&c, (4, 3), (5, 3), 1.0));
        assert!(!has(&c, (10, 3), (11, 3), 1.0));
    }

    #[test]
    fn finite_controller_caps_speed() {
        let p = ModelParams::finite(1.0, 1.0, 0.5, 2);
        let c = build_chain(&p, 10).unwrap();
        assert_eq!(c.jmax, 2);
        assert!(has(&c, (7, 0), (7, 2), 0.5));
        assert!(has(&c, (1, 2), (1, 1), 0.5));
        assert!(has(&c, (1, 2), (0, 2), 2.0));
    }

    #[test]
    fn observers_service_rates() {
        let c = build_chain(&ModelParams::observer_mminf(1.0, 1.5, 1.0), 8).unwrap();
        assert!(has(&c, (5, 2), (4, 2), 7.5));
        assert!(has(&c, (5, 2), (5, 5), 1.0));
        let c = build_chain(&ModelParams::observer_mm1(1.0, 2.0, 1.0), 8).unwrap();
        assert!(has(&c, (5, 0), (4, 0), 2.0));
    }

    #[test]
    fn finite_marginals_match_min_rule() {
        // Sampling by Poisson instants: P(S = j) = P(min(Q, smax) = j).
        let p = ModelParams::finite(1.0, 1.0, 0.8, 2);
        let sol = solve(&p, 120).unwrap();
        let sigma = sol.dist.speed_marginal();
        let gamma = sol.dist.queue_marginal();
        assert!((sigma[0] - gamma[0]).abs() < 1e-10);
        assert!((sigma[1] - gamma[1]).abs() < 1e-10);
        assert!((sigma[2] - gamma[2..].iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn truncation_too_small() {
        let p = ModelParams::infinite(2.0, 1.0, 0.5);
        assert!(matches!(solve(&p, 8), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn truncation_stability() {
        let p = ModelParams::infinite(1.0, 1.0, 1.0);
        let a = solve(&p, 40).unwrap();
        let b = solve(&p, 80).unwrap();
        assert!(a.dist.max_abs_diff(&b.dist) < 1e-9);
        assert!(a.residual < 1e-11 && b.residual < 1e-11);
    }

    #[test]
    fn power_iteration_path() {
        let p = ModelParams::observer_mm1(1.0, 2.0, 1.0);
        let chain = build_chain(&p, 30).unwrap();
        let a = stationary_with(&chain, SolveMethod::Direct).unwrap();
        let b = stationary_with(&chain, SolveMethod::PowerIteration).unwrap();
        assert!(a.dist.max_abs_diff(&b.dist) < 1e-10);
    }

    #[test]
    fn custom_profile_changes_the_answer() {
        let p = ModelParams::finite(1.0, 1.0, 1.0, 2);
        let fast = SpeedProfile::new(vec![0.0, 1.5, 3.0]).unwrap();
        let c = build_chain_with_profile(&p, 80, &fast).unwrap();
        let sol = stationary(&c).unwrap();
        let base = solve(&p, 80).unwrap();
        assert!(sol.dist.mean_queue() < base.dist.mean_queue());
        assert!(build_chain_with_profile(&p, 80, &SpeedProfile::linear(1.0, 3)).is_err());
    }
}
