use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::infinite::beta_j;
use crate::params::ModelParams;

use super::blocks::QbdBlocks;

/// A `(smax+1) x (smax+1)` matrix that is diagonal except for its last column.
///
/// The rate matrix has this shape, and so do its powers and the resolvent
/// `(I - R x)^-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    pub smax: usize,
    /// Diagonal entries `R_ii`, `i = 0..=smax`.
    pub diag: Vec<f64>,
    /// Off-diagonal last-column entries `R_{i,smax}`, `i = 0..smax`.
    pub lastcol: Vec<f64>,
}

impl RMatrix {
    pub fn identity(smax: usize) -> Self {
        RMatrix {
            smax,
            diag: vec![1.0; smax + 1],
            lastcol: vec![0.0; smax],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j == self.smax {
            self.lastcol[i]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.smax + 1;
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Triangular up to a permutation, so the eigenvalues are the diagonal.
    pub fn spectral_radius(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let s = self.smax;
        let mut out: Vec<f64> = v.iter().zip(&self.diag).map(|(a, d)| a * d).collect();
        out[s] += v[..s].iter().zip(&self.lastcol).map(|(a, r)| a * r).sum::<f64>();
        out
    }

    /// Matrix times the all-ones column.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = self.diag.clone();
        for (o, r) in out.iter_mut().zip(&self.lastcol) {
            *o += r;
        }
        out
    }

    /// `(I - R x)^-1`.
    pub fn resolvent(&self, x: f64) -> RMatrix {
        let s = self.smax;
        let ds = self.diag[s];
        let diag: Vec<f64> = self.diag.iter().map(|d| 1.0 / (1.0 - d * x)).collect();
        let lastcol = (0..s)
            .map(|i| self.lastcol[i] * x / ((1.0 - ds * x) * (1.0 - self.diag[i] * x)))
            .collect();
        RMatrix { smax: s, diag, lastcol }
    }

    /// `d/dx (I - R x)^-1`, which equals `sum_n n R^n x^(n-1)`.
    pub fn resolvent_derivative(&self, x: f64) -> RMatrix {
        let s = self.smax;
        let ds = self.diag[s];
        let diag: Vec<f64> = self.diag.iter().map(|d| d / ((1.0 - d * x) * (1.0 - d * x))).collect();
        let lastcol = (0..s)
            .map(|i| {
                let di = self.diag[i];
                let g = 1.0 / ((1.0 - ds * x) * (1.0 - di * x));
                self.lastcol[i] * g * (1.0 + x * (ds / (1.0 - ds * x) + di / (1.0 - di * x)))
            })
            .collect();
        RMatrix { smax: s, diag, lastcol }
    }

    /// Entrywise max of `A0 + R A1 + R^2 A2` with the level-independent blocks.
    pub fn residual(&self, blocks: &QbdBlocks) -> f64 {
        let r = self.to_dense();
        let res = blocks.a0() + &r * blocks.a1(blocks.smax) + &r * &r * blocks.a2();
        res.amax()
    }
}

/// Closed-form minimal solution of `A0 + R A1 + R^2 A2 = 0`.
pub fn r_matrix(p: &ModelParams) -> Result<RMatrix> {
    p.validate()?;
    let s = p.smax_finite()?;
    let (lam, mu, nu) = (p.lambda, p.mu, p.nu);
    let top = lam / (s as f64 * mu);
    let mut diag = Vec::with_capacity(s + 1);
    let mut lastcol = Vec::with_capacity(s);
    diag.push(lam / (lam + nu));
    lastcol.push(top);
    for i in 1..s {
        let b = beta_j(p, i).beta;
        diag.push(lam * b / (i as f64 * mu));
        lastcol.push(lam * (1.0 - b) / (s as f64 * mu));
    }
    diag.push(top);
    Ok(RMatrix { smax: s, diag, lastcol })
}

/// `(a^n - b^n) / (a - b)`, which is `n b^(n-1)` when `a = b`.
///
/// Written as `b^n expm1(n ln1p((a-b)/b)) / (a - b)` so that nearly equal
/// rates lose no precision.
pub fn geom_diff(a: f64, b: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if a == b {
        return n as f64 * b.powi(n as i32 - 1);
    }
    let (hi, lo) = if a.abs() >= b.abs() { (a, b) } else { (b, a) };
    if lo == 0.0 {
        return hi.powi(n as i32 - 1);
    }
    let d = hi - lo;
    lo.powi(n as i32) * (n as f64 * (d / lo).ln_1p()).exp_m1() / d
}

/// `R^n`, by the closed form: diagonal `R_ii^n`, last column
/// `R_{i,s} (R_ss^n - R_ii^n) / (R_ss - R_ii)`.
pub fn r_power(r: &RMatrix, n: usize) -> RMatrix {
    let s = r.smax;
    let ds = r.diag[s];
    RMatrix {
        smax: s,
        diag: r.diag.iter().map(|d| d.powi(n as i32)).collect(),
        lastcol: (0..s).map(|i| r.lastcol[i] * geom_diff(ds, r.diag[i], n)).collect(),
    }
}

/// Successive substitution `R <- -(A0 + R^2 A2) A1^-1` from `R = 0`.
///
/// Generic and slow; kept as an independent check of [`r_matrix`].
pub fn r_fixed_point(blocks: &QbdBlocks, tol: f64, max_iter: usize) -> Result<DMatrix<f64>> {
    let a0 = blocks.a0();
    let a2 = blocks.a2();
    let a1_inv = blocks
        .a1(blocks.smax)
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("A1 is singular".into()))?;
    let n = blocks.smax + 1;
    let mut r = DMatrix::zeros(n, n);
    for _ in 0..max_iter {
        let next = -(&a0 + &r * &r * &a2) * &a1_inv;
        let delta = (&next - &r).amax();
        r = next;
        if delta < tol {
            return Ok(r);
        }
    }
    Err(Error::NoConvergence(format!(
        "R iteration did not settle within {max_iter} steps"
    )))
}
