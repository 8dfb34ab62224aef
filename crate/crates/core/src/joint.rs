//! Truncated joint distributions of (queue length, speed).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tables with more cells than this are stored sparsely.
pub const DENSE_LIMIT: usize = 1_000_000;

/// Default tolerance for closed-form evaluations.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
/// Default tolerance for truncated linear systems.
pub const TRUNCATED_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Row-major in the queue length, `jmax + 1` columns.
    Dense(Vec<f64>),
    Sparse(BTreeMap<(usize, usize), f64>),
}

/// Steady-state probabilities `pi[i][j]` for `i <= qmax`, `j <= jmax`.
///
/// Whatever probability lies outside the table is reported in
/// [`mass_deficit`](JointDist::mass_deficit).
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist {
    storage: Storage,
    qmax: usize,
    jmax: usize,
    mass_deficit: f64,
}

/// A sample of the joint probability generating function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PgfPoint {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

impl JointDist {
    /// Builds a table by evaluating `f(i, j)` on the whole grid.
    ///
    /// Entries must be finite and no smaller than `-1e-12` (series extraction
    /// leaves roundoff-sized negatives); the total must not exceed one beyond
    /// roundoff.
    pub fn from_fn(qmax: usize, jmax: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let cells = (qmax + 1) * (jmax + 1);
        let storage = if cells <= DENSE_LIMIT {
            let mut v = Vec::with_capacity(cells);
            for i in 0..=qmax {
                for j in 0..=jmax {
                    v.push(f(i, j));
                }
            }
            Storage::Dense(v)
        } else {
            let mut m = BTreeMap::new();
            for i in 0..=qmax {
                for j in 0..=jmax {
                    let p = f(i, j);
                    if p != 0.0 {
                        m.insert((i, j), p);
                    }
                }
            }
            Storage::Sparse(m)
        };
        Self::with_storage(storage, qmax, jmax)
    }

    /// Builds a table from its nonzero entries only. Cheap for diagonal-heavy laws.
    pub fn from_entries(
        qmax: usize,
        jmax: usize,
        entries: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Result<Self> {
        let cells = (qmax + 1) * (jmax + 1);
        let storage = if cells <= DENSE_LIMIT {
            let mut v = vec![0.0; cells];
            for ((i, j), p) in entries {
                if i > qmax || j > jmax {
                    return Err(Error::Domain(format!("entry ({i},{j}) outside the table")));
                }
                v[i * (jmax + 1) + j] += p;
            }
            Storage::Dense(v)
        } else {
            let mut m = BTreeMap::new();
            for ((i, j), p) in entries {
                if i > qmax || j > jmax {
                    return Err(Error::Domain(format!("entry ({i},{j}) outside the table")));
                }
                *m.entry((i, j)).or_insert(0.0) += p;
            }
            Storage::Sparse(m)
        };
        Self::with_storage(storage, qmax, jmax)
    }

    fn with_storage(storage: Storage, qmax: usize, jmax: usize) -> Result<Self> {
        let mut d = JointDist {
            storage,
            qmax,
            jmax,
            mass_deficit: 0.0,
        };
        let mut total = 0.0;
        for (i, j, p) in d.entries() {
            if !p.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&p) {
                return Err(Error::Domain(format!("probability {p} at ({i},{j})")));
            }
            total += p;
        }
        if total > 1.0 + 1e-9 {
            return Err(Error::Domain(format!("table mass {total} exceeds one")));
        }
        d.mass_deficit = 1.0 - total;
        Ok(d)
    }

    pub fn qmax(&self) -> usize {
        self.qmax
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// `1 - sum of the table`.
    pub fn mass_deficit(&self) -> f64 {
        self.mass_deficit
    }

    pub fn is_converged(&self, tol: f64) -> bool {
        self.mass_deficit.abs() < tol
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > self.qmax || j > self.jmax {
            return 0.0;
        }
        match &self.storage {
            Storage::Dense(v) => v[i * (self.jmax + 1) + j],
            Storage::Sparse(m) => m.get(&(i, j)).copied().unwrap_or(0.0),
        }
    }

    /// All stored cells as `(i, j, probability)`. Dense tables yield zeros too.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, usize, f64)> + '_> {
        match &self.storage {
            Storage::Dense(v) => {
                let cols = self.jmax + 1;
                Box::new(v.iter().enumerate().map(move |(k, &p)| (k / cols, k % cols, p)))
            }
            Storage::Sparse(m) => Box::new(m.iter().map(|(&(i, j), &p)| (i, j, p))),
        }
    }

    /// Queue-length marginal, indexed `0..=qmax`.
    pub fn queue_marginal(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.qmax + 1];
        for (i, _, p) in self.entries() {
            g[i] += p;
        }
        g
    }

    /// Speed marginal, indexed `0..=jmax`.
    pub fn speed_marginal(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.jmax + 1];
        for (_, j, p) in self.entries() {
            s[j] += p;
        }
        s
    }

    pub fn mean_queue(&self) -> f64 {
        self.entries().map(|(i, _, p)| i as f64 * p).sum()
    }

    pub fn mean_speed(&self) -> f64 {
        self.entries().map(|(_, j, p)| j as f64 * p).sum()
    }

    pub fn prob_empty(&self) -> f64 {
        self.queue_marginal()[0]
    }

    /// Evaluates the truncated double power series `sum pi[i][j] x^i y^j`.
    pub fn pgf_eval(&self, x: f64, y: f64) -> Result<PgfPoint> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain(format!("pgf argument ({x}, {y}) outside [0,1]^2")));
        }
        let value = match &self.storage {
            Storage::Dense(v) => {
                let cols = self.jmax + 1;
                let mut acc = 0.0;
                for row in v.chunks(cols).rev() {
                    let inner = row.iter().rev().fold(0.0, |a, &p| a * y + p);
                    acc = acc * x + inner;
                }
                acc
            }
            Storage::Sparse(m) => m
                .iter()
                .map(|(&(i, j), &p)| p * x.powi(i as i32) * y.powi(j as i32))
                .sum(),
        };
        Ok(PgfPoint { x, y, value })
    }

    /// Total-variation distance `1/2 sum |p - q|` over the union of both tables.
    /// Mass missing from either table counts as disagreement.
    pub fn tv_distance(&self, other: &JointDist) -> f64 {
        let qmax = self.qmax.max(other.qmax);
        let jmax = self.jmax.max(other.jmax);
        let mut sum = 0.0;
        if self.is_sparse() || other.is_sparse() {
            let mut keys: BTreeMap<(usize, usize), ()> = BTreeMap::new();
            for (i, j, _) in self.entries().chain(other.entries()) {
                keys.insert((i, j), ());
            }
            for &(i, j) in keys.keys() {
                sum += (self.get(i, j) - other.get(i, j)).abs();
            }
        } else {
            for i in 0..=qmax {
                for j in 0..=jmax {
                    sum += (self.get(i, j) - other.get(i, j)).abs();
                }
            }
        }
        0.5 * (sum + self.mass_deficit.max(0.0) + other.mass_deficit.max(0.0))
    }

    /// Largest entrywise difference over the union of both tables.
    pub fn max_abs_diff(&self, other: &JointDist) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j, p) in self.entries() {
            worst = worst.max((p - other.get(i, j)).abs());
        }
        for (i, j, p) in other.entries() {
            worst = worst.max((p - self.get(i, j)).abs());
        }
        worst
    }
}
