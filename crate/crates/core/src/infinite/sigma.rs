use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::oracle::gth;
use crate::params::{ModelParams, Variant};

use super::{cond_dist, cond_mean, CondDist};

/// Target for the probability that a control instant samples a queue beyond
/// the truncation level.
pub const SIGMA_TAIL_TOL: f64 = 1e-9;

/// Direct solves above this size switch to power iteration.
const DIRECT_LIMIT: usize = 2000;
const MAX_TRUNCATION: usize = 16_384;

/// Speed marginal `sigma_0 ..= sigma_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaVector {
    pub sigma: Vec<f64>,
    /// Truncation level `N`.
    pub n: usize,
    /// Largest violation of the untruncated balance equations over `l <= N`.
    pub residual: f64,
    /// Probability that the controller samples a queue longer than `N`.
    pub tail_mass: f64,
}

impl SigmaVector {
    pub fn mean(&self) -> f64 {
        self.sigma.iter().enumerate().map(|(j, s)| j as f64 * s).sum()
    }
}

/// Starting truncation `max(20, ceil(5 rho + 10 sqrt(rho)))`.
pub fn initial_truncation(p: &ModelParams) -> usize {
    let rho = p.lambda / p.mu;
    20usize.max((5.0 * rho + 10.0 * rho.sqrt()).ceil() as usize)
}

/// Solves the speed-marginal balance equations with adaptive truncation.
///
/// The truncation starts at [`initial_truncation`] and doubles until the tail
/// mass drops below `1e-9`. Fails with `NoConvergence` when two successive
/// doublings leave the tail mass no smaller, or when the truncation would
/// exceed 16384.
pub fn sigma_solve(p: &ModelParams) -> Result<SigmaVector> {
    sigma_solve_from(p, initial_truncation(p))
}

pub fn sigma_solve_from(p: &ModelParams, start: usize) -> Result<SigmaVector> {
    check_variant(p)?;
    let mut n = start.max(1);
    let mut history: Vec<f64> = Vec::new();
    loop {
        let sv = solve_truncated(p, n)?;
        if sv.tail_mass < SIGMA_TAIL_TOL {
            return Ok(sv);
        }
        if history.len() >= 2 && sv.tail_mass >= history[history.len() - 2] {
            return Err(Error::NoConvergence(format!(
                "speed-marginal tail mass stuck at {:e} (N = {n})",
                sv.tail_mass
            )));
        }
        history.push(sv.tail_mass);
        n *= 2;
        if n > MAX_TRUNCATION {
            return Err(Error::NoConvergence(format!(
                "speed-marginal tail mass {:e} still above {SIGMA_TAIL_TOL:e} at N = {}",
                sv.tail_mass,
                n / 2
            )));
        }
    }
}

fn check_variant(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if p.variant != Variant::ControllerInfinite {
        return Err(Error::Domain(format!(
            "infinite-speed solver called with variant {}",
            p.variant
        )));
    }
    Ok(())
}

/// Transition kernel of the speed at control instants, truncated to
/// `0..=n`, with each row's overflow lumped into state `n`.
fn kernel(conds: &[CondDist], n: usize) -> Vec<f64> {
    let dim = n + 1;
    let mut k = vec![0.0; dim * dim];
    for (j, c) in conds.iter().enumerate() {
        let row = &mut k[j * dim..(j + 1) * dim];
        row.copy_from_slice(&c.pmf[..dim]);
        row[n] += c.tail_mass();
    }
    k
}

fn solve_truncated(p: &ModelParams, n: usize) -> Result<SigmaVector> {
    let conds: Vec<CondDist> = (0..=n).map(|j| cond_dist(p, j, n)).collect::<Result<_>>()?;
    let dim = n + 1;
    let mut k = kernel(&conds, n);
    let sigma = if dim <= DIRECT_LIMIT {
        gth::gth_dense(&mut k, dim)?
    } else {
        power(&k, dim)?
    };
    let mut residual: f64 = 0.0;
    for l in 0..dim {
        let inflow: f64 = (0..dim).map(|j| sigma[j] * conds[j].pmf[l]).sum();
        residual = residual.max((sigma[l] - inflow).abs());
    }
    let tail_mass = sigma.iter().zip(&conds).map(|(s, c)| s * c.tail_mass()).sum();
    Ok(SigmaVector {
        sigma,
        n,
        residual,
        tail_mass,
    })
}

fn power(k: &[f64], dim: usize) -> Result<Vec<f64>> {
    let mut s = vec![1.0 / dim as f64; dim];
    for _ in 0..200_000 {
        let mut next = vec![0.0; dim];
        for (j, &sj) in s.iter().enumerate() {
            if sj == 0.0 {
                continue;
            }
            for (dst, &kjl) in next.iter_mut().zip(&k[j * dim..(j + 1) * dim]) {
                *dst += sj * kjl;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let delta = s.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        s = next;
        if delta < 1e-15 {
            return Ok(s);
        }
    }
    Err(Error::NoConvergence("power iteration on the speed kernel".into()))
}

/// `pi[i][j] = sigma_j * p_j(i)` for `i <= len`, `j <= N`.
pub fn assemble_joint(p: &ModelParams, sigma: &SigmaVector, len: usize) -> Result<JointDist> {
    let width = len.max(sigma.n);
    let conds: Vec<CondDist> = (0..=sigma.n).map(|j| cond_dist(p, j, width)).collect::<Result<_>>()?;
    JointDist::from_fn(len, sigma.n, |i, j| sigma.sigma[j] * conds[j].pmf[i])
}

/// Speed marginal plus the assembled table for the uncapped controller.
#[derive(Clone, Debug)]
pub struct InfiniteSolution {
    pub params: ModelParams,
    pub sigma: SigmaVector,
    pub joint: JointDist,
}

impl InfiniteSolution {
    /// `E[Q] = sum_j sigma_j E[Q | S = j]`, using the closed-form conditional means.
    pub fn mean_queue(&self) -> f64 {
        self.sigma
            .sigma
            .iter()
            .enumerate()
            .map(|(j, s)| s * cond_mean(&self.params, j))
            .sum()
    }

    pub fn mean_speed(&self) -> f64 {
        self.sigma.mean()
    }
}

/// Solves the uncapped model; the table covers queue lengths up to the
/// speed truncation level.
pub fn solve(p: &ModelParams) -> Result<InfiniteSolution> {
    let sigma = sigma_solve(p)?;
    let joint = assemble_joint(p, &sigma, sigma.n)?;
    Ok(InfiniteSolution {
        params: *p,
        sigma,
        joint,
    })
}
