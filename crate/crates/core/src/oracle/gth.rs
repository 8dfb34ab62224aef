//! Stationary vectors of finite Markov chains.
//!
//! The direct solver is Grassmann–Taksar–Heyman state reduction. It never
//! subtracts, so tiny probabilities keep full relative accuracy, and on a
//! banded rate matrix all fill-in stays inside the band.

use crate::error::{Error, Result};

/// Square matrix storing only the cells with `|row - col| <= bw`.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw, "({i},{j}) outside band {}", self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }
}

/// Stationary distribution of the chain whose off-diagonal transition rates
/// are stored in `a`. The diagonal is ignored, so `a` may hold either rates
/// or transition probabilities. `a` is overwritten.
pub fn gth_banded(a: &mut BandMatrix) -> Result<Vec<f64>> {
    let n = a.n;
    let bw = a.bw;
    if n == 0 {
        return Err(Error::SingularSystem("empty chain".into()));
    }
    let mut exit = vec![0.0; n];
    for k in (1..n).rev() {
        let lo = k.saturating_sub(bw);
        let s: f64 = (lo..k).map(|j| a.get(k, j)).sum();
        if s <= 0.0 {
            return Err(Error::SingularSystem(format!(
                "state {k} cannot reach lower-indexed states; chain is reducible"
            )));
        }
        exit[k] = s;
        for i in lo..k {
            let aik = a.get(i, k);
            if aik == 0.0 {
                continue;
            }
            let f = aik / s;
            for j in lo..k {
                if j != i {
                    let akj = a.get(k, j);
                    if akj != 0.0 {
                        a.add(i, j, f * akj);
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for k in 1..n {
        let lo = k.saturating_sub(bw);
        let inflow: f64 = (lo..k).map(|i| x[i] * a.get(i, k)).sum();
        x[k] = inflow / exit[k];
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    Ok(x)
}

/// Dense GTH. `a` is row-major `n x n`, diagonal ignored, overwritten.
pub fn gth_dense(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Err(Error::SingularSystem("empty chain".into()));
    }
    let mut exit = vec![0.0; n];
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[k * n + j]).sum();
        if s <= 0.0 {
            return Err(Error::SingularSystem(format!(
                "state {k} cannot reach lower-indexed states; chain is reducible"
            )));
        }
        exit[k] = s;
        let (upper, lower) = a.split_at_mut(k * n);
        let row_k = &lower[..k];
        for i in 0..k {
            let aik = upper[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let f = aik / s;
            let row_i = &mut upper[i * n..i * n + k];
            for (j, (dst, &akj)) in row_i.iter_mut().zip(row_k).enumerate() {
                if j != i {
                    *dst += f * akj;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for k in 1..n {
        let inflow: f64 = (0..k).map(|i| x[i] * a[i * n + k]).sum();
        x[k] = inflow / exit[k];
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    Ok(x)
}

/// A single transition `from -> to` with its rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

/// `max_k |(pi G)_k|` for the generator described by `transitions`.
pub fn generator_residual(pi: &[f64], transitions: &[Transition]) -> f64 {
    let mut r = vec![0.0; pi.len()];
    for t in transitions {
        if t.from == t.to {
            continue;
        }
        r[t.from] -= pi[t.from] * t.rate;
        r[t.to] += pi[t.from] * t.rate;
    }
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Uniformized power iteration with periodic Aitken extrapolation.
///
/// Used when the banded factorization would not fit in memory. Stops once the
/// generator residual drops below `tol` or after `max_iter` sweeps.
pub fn power_iteration(n: usize, transitions: &[Transition], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    for t in transitions.iter().filter(|t| t.from != t.to) {
        out[t.from] += t.rate;
    }
    let unif = out.iter().fold(0.0f64, |m, &v| m.max(v)) * 1.05;
    if unif <= 0.0 {
        return Err(Error::SingularSystem("chain has no transitions".into()));
    }
    let step = |pi: &[f64]| {
        let mut next: Vec<f64> = pi.iter().zip(&out).map(|(p, o)| p * (1.0 - o / unif)).collect();
        for t in transitions.iter().filter(|t| t.from != t.to) {
            next[t.to] += pi[t.from] * t.rate / unif;
        }
        next
    };
    let normalize = |v: &mut Vec<f64>| {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
    };
    let mut pi = vec![1.0 / n as f64; n];
    let mut best = generator_residual(&pi, transitions);
    for it in 0..max_iter {
        let p1 = step(&pi);
        let p2 = step(&p1);
        let mut next = p2.clone();
        if it % 10 == 9 {
            // componentwise delta-squared; keep it only if it helps
            let mut acc: Vec<f64> = pi
                .iter()
                .zip(&p1)
                .zip(&p2)
                .map(|((&a, &b), &c)| {
                    let d = c - 2.0 * b + a;
                    if d.abs() > 1e-300 {
                        c - (c - b) * (c - b) / d
                    } else {
                        c
                    }
                })
                .collect();
            normalize(&mut acc);
            if generator_residual(&acc, transitions) < generator_residual(&p2, transitions) {
                next = acc;
            }
        }
        normalize(&mut next);
        pi = next;
        let res = generator_residual(&pi, transitions);
        best = best.min(res);
        if res < tol {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence(format!(
        "power iteration residual {best:e} above {tol:e} after {max_iter} sweeps"
    )))
}
