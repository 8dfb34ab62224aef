//! Event-driven simulation of all four variants.
//!
//! Estimates are time averages over `[warmup, horizon]`, split into equal
//! batches; the half-widths are 95% batch-means intervals.

mod engine;
mod probes;

pub use engine::{run, Recorder};
pub use probes::{conjecture_probe, fluid_probe, ConjectureProbe, DrainStat, FluidProbe, PgfSample, CONJECTURE_GRID};

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::params::{ModelParams, SpeedProfile};

use engine::Dynamics;

/// Levels covered by the crossing and PASTA diagnostics.
pub const DIAGNOSTIC_LEVELS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub horizon: f64,
    pub warmup: f64,
    pub batches: usize,
    pub seed: u64,
    /// Stream of the generator, one per replication.
    pub replication: u64,
    /// Report `nu Q` and `nu S` instead of `Q` and `S`.
    pub scaled: bool,
    /// Record the empirical joint table up to this queue length.
    pub table: Option<usize>,
    pub profile: Option<SpeedProfile>,
}

impl SimConfig {
    /// Defaults: warmup 10% of the horizon, 30 batches, stream 0.
    pub fn new(params: ModelParams, horizon: f64, seed: u64) -> Self {
        SimConfig {
            params,
            horizon,
            warmup: 0.1 * horizon,
            batches: 30,
            seed,
            replication: 0,
            scaled: false,
            table: None,
            profile: None,
        }
    }

    pub fn validate(&self) -> Result<bool> {
        let unstable = self.params.validate_for_simulation()?;
        if !(self.horizon.is_finite() && self.warmup >= 0.0 && self.horizon > self.warmup) {
            return Err(Error::Domain(format!(
                "need 0 <= warmup < horizon, got warmup {} horizon {}",
                self.warmup, self.horizon
            )));
        }
        if self.batches < 10 {
            return Err(Error::Domain(format!("need at least 10 batches, got {}", self.batches)));
        }
        if let Some(prof) = &self.profile {
            crate::qbd::build_blocks(&self.params, Some(prof))?;
        }
        Ok(unstable)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimEstimate {
    pub name: String,
    pub point: f64,
    pub half_width: f64,
    pub batches: usize,
}

impl SimEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (value - self.point).abs() <= self.half_width
    }
}

/// Two-sided 95% Student quantile with `n - 1` degrees of freedom.
pub fn t_quantile(n: usize) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY)
}

/// Mean of the batch values with its 95% half-width.
pub fn batch_estimate(name: &str, values: &[f64]) -> SimEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    SimEstimate {
        name: name.to_string(),
        point: mean,
        half_width: t_quantile(n) * (var / n as f64).sqrt(),
        batches: n,
    }
}

/// Batch means of `num / den`, skipping batches where `den` is zero.
pub fn ratio_estimate(name: &str, num: &[f64], den: &[f64]) -> SimEstimate {
    let vals: Vec<f64> = num
        .iter()
        .zip(den)
        .filter(|(_, d)| **d > 0.0)
        .map(|(n, d)| n / d)
        .collect();
    if vals.is_empty() {
        return SimEstimate {
            name: name.to_string(),
            point: f64::NAN,
            half_width: f64::INFINITY,
            batches: 0,
        };
    }
    batch_estimate(name, &vals)
}

/// Up- and down-crossing rates of each level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossingStats {
    pub up_count: Vec<u64>,
    pub down_count: Vec<u64>,
    /// `lambda P(Q = i) - E[departure rate; Q = i + 1]`, per level.
    pub balance: Vec<SimEstimate>,
}

/// Queue length seen at control instants against the time average.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PastaStats {
    pub samples: u64,
    pub at_control: Vec<f64>,
    pub time_average: Vec<f64>,
    /// Per-level difference, batch means.
    pub difference: Vec<SimEstimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub estimates: Vec<SimEstimate>,
    #[serde(skip)]
    pub joint: Option<JointDist>,
    pub events: u64,
    pub unstable: bool,
    pub crossings: CrossingStats,
    pub pasta: PastaStats,
}

impl SimResult {
    pub fn estimate(&self, name: &str) -> Option<&SimEstimate> {
        self.estimates.iter().find(|e| e.name == name)
    }
}

struct Standard {
    dynamics: Dynamics,
    len: Vec<f64>,
    q: Vec<f64>,
    s: Vec<f64>,
    empty: Vec<f64>,
    level_time: Vec<Vec<f64>>,
    level_dep: Vec<Vec<f64>>,
    control_hits: Vec<Vec<f64>>,
    control_total: Vec<f64>,
    up: Vec<u64>,
    down: Vec<u64>,
    table: Option<(usize, usize, Vec<f64>)>,
}

impl Standard {
    fn new(cfg: &SimConfig) -> Self {
        let b = cfg.batches;
        let l = DIAGNOSTIC_LEVELS + 2;
        let table = cfg.table.map(|n| {
            let jmax = cfg.params.smax.finite().unwrap_or(n).min(n);
            (n, jmax, vec![0.0; (n + 1) * (jmax + 1)])
        });
        Standard {
            dynamics: Dynamics::new(&cfg.params, cfg.profile.as_ref()),
            len: vec![0.0; b],
            q: vec![0.0; b],
            s: vec![0.0; b],
            empty: vec![0.0; b],
            level_time: vec![vec![0.0; b]; l],
            level_dep: vec![vec![0.0; b]; l],
            control_hits: vec![vec![0.0; b]; l],
            control_total: vec![0.0; b],
            up: vec![0; l],
            down: vec![0; l],
            table,
        }
    }
}

impl Recorder for Standard {
    fn hold(&mut self, b: usize, len: f64, q: u64, s: u64) {
        self.len[b] += len;
        self.q[b] += len * q as f64;
        self.s[b] += len * s as f64;
        if q == 0 {
            self.empty[b] += len;
        }
        let qi = q as usize;
        if qi < self.level_time.len() {
            self.level_time[qi][b] += len;
            self.level_dep[qi][b] += len * self.dynamics.departure_rate(q, s);
        }
        if let Some((n, jmax, t)) = &mut self.table {
            if qi <= *n && (s as usize) <= *jmax {
                t[qi * (*jmax + 1) + s as usize] += len;
            }
        }
    }

    fn control(&mut self, _t: f64, b: usize, q: u64, _before: u64, _after: u64) {
        self.control_total[b] += 1.0;
        if (q as usize) < self.control_hits.len() {
            self.control_hits[q as usize][b] += 1.0;
        }
    }

    fn arrival(&mut self, _t: f64, q: u64) {
        if (q as usize) < self.up.len() {
            self.up[q as usize] += 1;
        }
    }

    fn departure(&mut self, _t: f64, q: u64) {
        if (q as usize) < self.down.len() {
            self.down[q as usize] += 1;
        }
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    let unstable = cfg.validate()?;
    let mut rec = Standard::new(cfg);
    let events = run(cfg, &mut rec);
    let per_time = |v: &[f64]| -> Vec<f64> { v.iter().zip(&rec.len).map(|(a, l)| a / l).collect() };
    let nu = cfg.params.nu;
    let (qn, sn) = if cfg.scaled { ("E_nuQ", "E_nuS") } else { ("EQ", "ES") };
    let scale = if cfg.scaled { nu } else { 1.0 };
    let mut estimates = vec![
        batch_estimate(qn, &per_time(&rec.q).iter().map(|v| v * scale).collect::<Vec<_>>()),
        batch_estimate(sn, &per_time(&rec.s).iter().map(|v| v * scale).collect::<Vec<_>>()),
        batch_estimate("P0", &per_time(&rec.empty)),
    ];
    estimates.retain(|e| e.point.is_finite());

    let lam = cfg.params.lambda;
    let balance = (0..DIAGNOSTIC_LEVELS)
        .map(|i| {
            let diff: Vec<f64> = (0..cfg.batches)
                .map(|b| (lam * rec.level_time[i][b] - rec.level_dep[i + 1][b]) / rec.len[b])
                .collect();
            batch_estimate(&format!("balance_{i}"), &diff)
        })
        .collect();
    let total_len: f64 = rec.len.iter().sum();
    let total_controls: f64 = rec.control_total.iter().sum();
    let pasta = PastaStats {
        samples: total_controls as u64,
        at_control: (0..DIAGNOSTIC_LEVELS)
            .map(|k| rec.control_hits[k].iter().sum::<f64>() / total_controls.max(1.0))
            .collect(),
        time_average: (0..DIAGNOSTIC_LEVELS)
            .map(|k| rec.level_time[k].iter().sum::<f64>() / total_len)
            .collect(),
        difference: (0..DIAGNOSTIC_LEVELS)
            .map(|k| {
                let diff: Vec<f64> = (0..cfg.batches)
                    .filter(|&b| rec.control_total[b] > 0.0)
                    .map(|b| rec.control_hits[k][b] / rec.control_total[b] - rec.level_time[k][b] / rec.len[b])
                    .collect();
                batch_estimate(&format!("pasta_{k}"), &diff)
            })
            .collect(),
    };
    let joint = match &rec.table {
        Some((n, jmax, t)) => Some(JointDist::from_fn(*n, *jmax, |i, j| t[i * (jmax + 1) + j] / total_len)?),
        None => None,
    };
    Ok(SimResult {
        config: cfg.clone(),
        estimates,
        joint,
        events,
        unstable,
        crossings: CrossingStats {
            up_count: rec.up[..DIAGNOSTIC_LEVELS].to_vec(),
            down_count: rec.down[..DIAGNOSTIC_LEVELS].to_vec(),
            balance,
        },
        pasta,
    })
}

/// `n` independent replications, stream `i` for replication `i`, run in
/// parallel. The output order follows the stream index.
pub fn simulate_replications(cfg: &SimConfig, n: usize) -> Result<Vec<SimResult>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.replication = i;
            simulate(&c)
        })
        .collect()
}
