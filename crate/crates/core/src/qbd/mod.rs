//! Controller with a finite maximum speed.
//!
//! The chain is a quasi-birth-death process: levels are queue lengths, phases
//! are speeds `0..=smax`, and from level `smax` on the transitions no longer
//! depend on the level. Its stationary law is matrix-geometric,
//! `pi_n = pi_{smax-1} R^(n-smax+1)`, with an explicit rate matrix `R`
//! ([`r_matrix`]). The levels below `smax` come from a finite linear system
//! ([`solve_boundary`]).

mod blocks;
mod fluid;
mod limits;
mod rmatrix;
mod s1;

pub use blocks::{build_blocks, QbdBlocks};
pub use fluid::{fluid_cycle, fluid_pgfs, scale_split, scale_threshold, FluidCycle};
pub use limits::limit_nu_inf_finite;
pub use rmatrix::{geom_diff, r_fixed_point, r_matrix, r_power, RMatrix};
pub use s1::{closed_form_s1, S1ClosedForm};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::oracle::gth;
use crate::params::ModelParams;

/// Stationary law of the capped controller.
#[derive(Clone, Debug)]
pub struct QbdSolution {
    pub params: ModelParams,
    pub r: RMatrix,
    /// `pi_0 ..= pi_{smax-1}`, each of length `smax + 1`.
    pub boundary: Vec<Vec<f64>>,
    pub normalized: bool,
}

impl QbdSolution {
    pub fn smax(&self) -> usize {
        self.r.smax
    }

    fn last_boundary(&self) -> &[f64] {
        &self.boundary[self.smax() - 1]
    }

    /// `pi_n`, the row of level `n`.
    pub fn level(&self, n: usize) -> Vec<f64> {
        let s = self.smax();
        if n < s {
            self.boundary[n].clone()
        } else {
            r_power(&self.r, n + 1 - s).left_mul(self.last_boundary())
        }
    }

    /// `pi_0 ..= pi_qmax`.
    pub fn levels(&self, qmax: usize) -> Vec<Vec<f64>> {
        let s = self.smax();
        let mut out: Vec<Vec<f64>> = self.boundary.iter().take(qmax + 1).cloned().collect();
        while out.len() <= qmax {
            let next = self.r.left_mul(out.last().expect("smax >= 1"));
            out.push(next);
        }
        debug_assert!(out.len() == qmax + 1 && s >= 1);
        out
    }

    /// Per-phase mass on levels above `k`.
    pub fn tail_by_phase(&self, k: usize) -> Vec<f64> {
        let s = self.smax();
        let geo = self.r.resolvent(1.0);
        if k + 2 >= s {
            let start = r_power(&self.r, k + 2 - s).left_mul(self.last_boundary());
            geo.left_mul(&start)
        } else {
            let mut acc = geo.left_mul(self.last_boundary());
            for row in &self.boundary[k + 1..s - 1] {
                acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            }
            acc
        }
    }

    pub fn tail_mass(&self, k: usize) -> f64 {
        self.tail_by_phase(k).iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        let below: f64 = self.boundary[..self.smax() - 1].iter().flatten().sum();
        below + self.r.resolvent(1.0).left_mul(self.last_boundary()).iter().sum::<f64>()
    }

    /// `P(S = j)`, exact.
    pub fn speed_marginal(&self) -> Vec<f64> {
        let s = self.smax();
        let mut m = self.r.resolvent(1.0).left_mul(self.last_boundary());
        for row in &self.boundary[..s - 1] {
            m.iter_mut().zip(row).for_each(|(a, v)| *a += v);
        }
        m
    }

    pub fn mean_speed(&self) -> f64 {
        self.speed_marginal()
            .iter()
            .enumerate()
            .map(|(j, v)| j as f64 * v)
            .sum()
    }

    /// `E[Q]`, exact: the tail contributes
    /// `pi_{s-1} [(s-1) (I-R)^-1 + R (I-R)^-2] 1`.
    pub fn mean_queue(&self) -> f64 {
        let s = self.smax();
        let below: f64 = self.boundary[..s - 1]
            .iter()
            .enumerate()
            .map(|(n, row)| n as f64 * row.iter().sum::<f64>())
            .sum();
        let last = self.last_boundary();
        let geo: f64 = self.r.resolvent(1.0).left_mul(last).iter().sum();
        let lin: f64 = self.r.resolvent_derivative(1.0).left_mul(last).iter().sum();
        below + (s - 1) as f64 * geo + lin
    }

    pub fn prob_empty(&self) -> f64 {
        self.boundary[0].iter().sum()
    }

    /// Levels `0..=qmax` as a table; the rest is left as mass deficit.
    pub fn to_joint(&self, qmax: usize) -> Result<JointDist> {
        let rows = self.levels(qmax);
        JointDist::from_fn(qmax, self.smax(), |i, j| rows[i][j])
    }

    /// Smallest table (at least `smax` levels) whose deficit is below `tol`.
    pub fn to_joint_tol(&self, tol: f64) -> Result<JointDist> {
        let mut q = self.smax();
        while self.tail_mass(q) >= tol {
            q = q * 2 + 1;
            if q > 1 << 24 {
                return Err(Error::NoConvergence(format!("tail above {tol:e} at level {q}")));
            }
        }
        // binary search for the first level that meets the tolerance
        let (mut lo, mut hi) = (q / 2, q);
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.tail_mass(mid) < tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.to_joint(hi.max(self.smax()))
    }

    /// Largest entry of `pi G` over levels `0..=max_level`.
    pub fn balance_residual(&self, max_level: usize) -> Result<f64> {
        let b = build_blocks(&self.params, None)?;
        let rows = self.levels(max_level + 1);
        let (a0, a2) = (b.a0(), b.a2());
        let mut worst: f64 = 0.0;
        for n in 0..=max_level {
            let mut acc = row(&rows[n]) * b.a1(n) + row(&rows[n + 1]) * &a2;
            if n >= 1 {
                acc += row(&rows[n - 1]) * &a0;
            }
            worst = worst.max(acc.amax());
        }
        Ok(worst)
    }
}

fn row(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, v.len(), v)
}

/// Boundary levels `pi_0 ..= pi_{smax-1}` and the resulting stationary law.
///
/// The levels are eliminated top-down: level `smax-1` is closed by
/// `pi_smax = pi_{smax-1} R`, and each lower level gives
/// `pi_n = pi_{n-1} A0 (-(A1(n) + R_n A2))^-1 =: pi_{n-1} R_{n-1}`. Level 0 is
/// then the stationary vector of the censored generator `A1(0) + R_0 A2`,
/// found by GTH, and normalization uses `(I - R)^-1` for the tail.
pub fn solve_boundary(p: &ModelParams) -> Result<QbdSolution> {
    let r = r_matrix(p)?;
    let blocks = build_blocks(p, None)?;
    let s = blocks.smax;
    let (a0, a2) = (blocks.a0(), blocks.a2());
    let mut x = blocks.a1(s - 1) + r.to_dense() * &a2;
    // rate matrices between boundary levels, R_{n-1} for n = s-1 down to 1
    let mut local: Vec<DMatrix<f64>> = Vec::with_capacity(s.saturating_sub(1));
    for n in (1..s).rev() {
        let inv = (-&x)
            .try_inverse()
            .ok_or_else(|| Error::SingularBoundary(format!("level {n} block is singular")))?;
        let rn = &a0 * inv;
        x = blocks.a1(n - 1) + &rn * &a2;
        local.push(rn);
    }
    local.reverse();
    let dim = s + 1;
    let mut censored: Vec<f64> = x.transpose().iter().copied().collect();
    debug_assert_eq!(censored.len(), dim * dim);
    let pi0 = gth::gth_dense(&mut censored, dim)
        .map_err(|e| Error::SingularBoundary(format!("censored level-0 chain: {e}")))?;
    let mut boundary = vec![pi0];
    for rn in &local {
        let next = row(boundary.last().expect("non-empty")) * rn;
        boundary.push(next.iter().copied().collect());
    }
    let mut sol = QbdSolution {
        params: *p,
        r,
        boundary,
        normalized: false,
    };
    let total = sol.total_mass();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::SingularBoundary(format!("normalization constant {total}")));
    }
    for v in sol.boundary.iter_mut().flatten() {
        *v /= total;
    }
    sol.normalized = true;
    Ok(sol)
}

/// `P(x, y) = sum_{n < s-1} pi_n(x,y) + pi_{s-1} (I - R x)^-1 x^(s-1) [1, y, ..., y^s]^T`.
pub fn qbd_to_pgf(sol: &QbdSolution, x: f64, y: f64) -> f64 {
    let s = sol.smax();
    let ypow: Vec<f64> = (0..=s).map(|j| y.powi(j as i32)).collect();
    let dot = |v: &[f64]| v.iter().zip(&ypow).map(|(a, b)| a * b).sum::<f64>();
    let mut total = 0.0;
    let mut xn = 1.0;
    for rown in &sol.boundary[..s - 1] {
        total += xn * dot(rown);
        xn *= x;
    }
    total + xn * dot(&sol.r.resolvent(x).left_mul(sol.last_boundary()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s1_boundary_values() {
        let (lam, mu, nu) = (1.0, 2.0, 1.0);
        let sol = solve_boundary(&ModelParams::finite(lam, mu, nu, 1)).unwrap();
        let pi00 = nu * (mu - lam) / (mu * (2.0 * lam + nu));
        assert!((sol.boundary[0][0] - pi00).abs() < 1e-14);
        assert!((pi00 - 1.0 / 6.0).abs() < 1e-15);
        assert!((sol.boundary[0][1] - lam / nu * pi00).abs() < 1e-14);
        let busy_fast = sol.speed_marginal()[1] - sol.boundary[0][1];
        assert!((busy_fast - lam / mu).abs() < 1e-14);
    }

    #[test]
    fn balance_and_normalization() {
        for p in [
            ModelParams::finite(1.0, 1.0, 1.0, 2),
            ModelParams::finite(2.5, 1.0, 0.3, 4),
            ModelParams::finite(0.2, 1.0, 7.0, 3),
        ] {
            let sol = solve_boundary(&p).unwrap();
            assert!((sol.total_mass() - 1.0).abs() < 1e-13);
            assert!(sol.balance_residual(40).unwrap() < 1e-10);
            let n = sol.smax() + 3;
            let lvl = sol.level(n);
            let it = &sol.levels(n)[n];
            assert!(lvl.iter().zip(it).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }

    #[test]
    fn exact_moments_match_table() {
        let p = ModelParams::finite(2.5, 1.0, 0.3, 4);
        let sol = solve_boundary(&p).unwrap();
        let d = sol.to_joint_tol(1e-14).unwrap();
        assert!(d.mass_deficit() < 1e-14);
        assert!((d.mean_queue() - sol.mean_queue()).abs() < 1e-10);
        assert!((d.mean_speed() - sol.mean_speed()).abs() < 1e-12);
        for k in [0, 2, 5, 20] {
            let direct: f64 = 1.0 - sol.levels(k).iter().flatten().sum::<f64>();
            assert!((sol.tail_mass(k) - direct).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn pgf_matches_series() {
        let p = ModelParams::finite(1.5, 1.0, 0.8, 3);
        let sol = solve_boundary(&p).unwrap();
        assert!((qbd_to_pgf(&sol, 1.0, 1.0) - 1.0).abs() < 1e-13);
        let d = sol.to_joint_tol(1e-13).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.9), (0.8, 0.2), (1.0, 0.5), (0.95, 1.0)] {
            let series = d.pgf_eval(x, y).unwrap().value;
            assert!((qbd_to_pgf(&sol, x, y) - series).abs() < 1e-12);
        }
    }
}
