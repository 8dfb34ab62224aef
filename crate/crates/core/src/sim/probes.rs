//! Slow-control measurements on the scaled process.
//!
//! A state counts as fluid scale when its coordinate exceeds
//! [`scale_threshold`]`(nu)`, the same cut used by
//! [`scale_split`](crate::qbd::scale_split).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::infinite::conjecture_pgf;
use crate::params::Variant;
use crate::qbd::{fluid_cycle, scale_threshold};

use super::engine::run;
use super::{batch_estimate, ratio_estimate, Recorder, SimConfig, SimEstimate};

/// Points at which the empirical scaled pgf is compared with the conjectured one.
pub const CONJECTURE_GRID: [(f64, f64); 5] = [(0.5, 1.0), (1.0, 0.5), (0.5, 0.5), (0.8, 0.9), (0.2, 0.7)];

const MAX_NU: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PgfSample {
    pub x: f64,
    pub y: f64,
    /// Time average of `x^{nu Q} y^{nu S}`.
    pub empirical: SimEstimate,
    pub conjecture: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureProbe {
    pub threshold: usize,
    /// Fraction of time with `Q > threshold` and `S <= threshold`.
    pub q_axis: SimEstimate,
    /// Fraction of time with `S > threshold` and `Q <= threshold`.
    pub s_axis: SimEstimate,
    /// Mean of `nu Q` while on the queue axis.
    pub q_mean: SimEstimate,
    /// Mean of `nu S` while on the speed axis.
    pub s_mean: SimEstimate,
    /// Exponential rates fitted by moments, `1 / mean`.
    pub q_rate: f64,
    pub s_rate: f64,
    pub pgf: Vec<PgfSample>,
    pub events: u64,
}

struct AxisRecorder {
    nu: f64,
    thr: u64,
    logs: Vec<(f64, f64)>,
    len: Vec<f64>,
    q_time: Vec<f64>,
    s_time: Vec<f64>,
    q_sum: Vec<f64>,
    s_sum: Vec<f64>,
    pgf: Vec<Vec<f64>>,
}

impl Recorder for AxisRecorder {
    fn hold(&mut self, b: usize, len: f64, q: u64, s: u64) {
        self.len[b] += len;
        let (sq, ss) = (self.nu * q as f64, self.nu * s as f64);
        if q > self.thr && s <= self.thr {
            self.q_time[b] += len;
            self.q_sum[b] += len * sq;
        } else if s > self.thr && q <= self.thr {
            self.s_time[b] += len;
            self.s_sum[b] += len * ss;
        }
        for (k, (lx, ly)) in self.logs.iter().enumerate() {
            self.pgf[k][b] += len * (sq * lx + ss * ly).exp();
        }
    }
}

fn fraction(name: &str, part: &[f64], len: &[f64]) -> SimEstimate {
    let v: Vec<f64> = part.iter().zip(len).map(|(a, l)| a / l).collect();
    batch_estimate(name, &v)
}

/// Axis fractions, scaled axis means and pgf samples for the unbounded
/// controller at small `nu`. Needs `cfg.scaled`.
pub fn conjecture_probe(cfg: &SimConfig) -> Result<ConjectureProbe> {
    cfg.validate()?;
    let p = &cfg.params;
    if p.variant != Variant::ControllerInfinite {
        return Err(Error::Domain(format!(
            "conjecture probe needs the infinite controller, got {}",
            p.variant
        )));
    }
    if !cfg.scaled {
        return Err(Error::Domain("conjecture probe needs the scaled flag".into()));
    }
    if p.nu > MAX_NU {
        return Err(Error::Domain(format!(
            "conjecture probe needs nu <= {MAX_NU}, got {}",
            p.nu
        )));
    }
    let b = cfg.batches;
    let mut rec = AxisRecorder {
        nu: p.nu,
        thr: scale_threshold(p.nu) as u64,
        logs: CONJECTURE_GRID.iter().map(|(x, y)| (x.ln(), y.ln())).collect(),
        len: vec![0.0; b],
        q_time: vec![0.0; b],
        s_time: vec![0.0; b],
        q_sum: vec![0.0; b],
        s_sum: vec![0.0; b],
        pgf: vec![vec![0.0; b]; CONJECTURE_GRID.len()],
    };
    let events = run(cfg, &mut rec);
    let q_mean = ratio_estimate("q_axis_mean", &rec.q_sum, &rec.q_time);
    let s_mean = ratio_estimate("s_axis_mean", &rec.s_sum, &rec.s_time);
    let pgf = CONJECTURE_GRID
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| {
            Ok(PgfSample {
                x,
                y,
                empirical: fraction(&format!("pgf_x{x}_y{y}"), &rec.pgf[k], &rec.len),
                conjecture: conjecture_pgf(x, y, p.lambda)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConjectureProbe {
        threshold: rec.thr as usize,
        q_axis: fraction("q_axis", &rec.q_time, &rec.len),
        s_axis: fraction("s_axis", &rec.s_time, &rec.len),
        q_rate: 1.0 / q_mean.point,
        s_rate: 1.0 / s_mean.point,
        q_mean,
        s_mean,
        pgf,
        events,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DrainStat {
    /// Speed in force before the inspection that started the drain.
    pub speed: usize,
    pub count: usize,
    /// Scaled drain time `nu * duration`.
    pub mean: SimEstimate,
    /// `(lambda - speed mu) / (smax mu - lambda)`.
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluidProbe {
    pub threshold: usize,
    /// `Q > threshold` with a speed in `S-`.
    pub fluid_unstable: SimEstimate,
    /// `Q > threshold` with a speed in `S+`.
    pub fluid_stable: SimEstimate,
    /// `Q <= threshold`.
    pub normal: SimEstimate,
    /// Time per speed, laid out like the fluid-cycle `sigma`: the last slot
    /// is top-speed time with `Q > threshold`.
    pub occupancy: Vec<SimEstimate>,
    /// The fluid-cycle `sigma` for comparison.
    pub sigma: Vec<f64>,
    pub drains: Vec<DrainStat>,
    pub events: u64,
}

struct PhaseRecorder {
    thr: u64,
    smax: u64,
    slow: Vec<bool>,
    nu: f64,
    len: Vec<f64>,
    unstable: Vec<f64>,
    stable: Vec<f64>,
    normal: Vec<f64>,
    occ: Vec<Vec<f64>>,
    open: Option<(f64, usize)>,
    drains: Vec<Vec<f64>>,
}

impl Recorder for PhaseRecorder {
    fn hold(&mut self, b: usize, len: f64, q: u64, s: u64) {
        self.len[b] += len;
        let si = s as usize;
        if q > self.thr {
            if self.slow[si] {
                self.unstable[b] += len;
            } else {
                self.stable[b] += len;
            }
        } else {
            self.normal[b] += len;
        }
        if s == self.smax && q > self.thr {
            self.occ[si + 1][b] += len;
        } else {
            self.occ[si][b] += len;
        }
    }

    fn control(&mut self, t: f64, _b: usize, q: u64, before: u64, after: u64) {
        if q > self.thr && after == self.smax && self.slow[before as usize] && self.open.is_none() {
            self.open = Some((t, before as usize));
        }
    }

    fn departure(&mut self, t: f64, q: u64) {
        if q <= self.thr {
            if let Some((start, j)) = self.open.take() {
                self.drains[j].push(self.nu * (t - start));
            }
        }
    }
}

/// Phase fractions, speed occupancy and drain times of the capped controller
/// at small `nu`.
pub fn fluid_probe(cfg: &SimConfig) -> Result<FluidProbe> {
    let p = &cfg.params;
    if p.variant != Variant::ControllerFinite {
        return Err(Error::Domain(format!(
            "fluid probe needs the finite controller, got {}",
            p.variant
        )));
    }
    if cfg.profile.is_some() {
        return Err(Error::Domain("fluid probe needs the linear speed profile".into()));
    }
    p.validate()?;
    cfg.validate()?;
    if p.nu > MAX_NU {
        return Err(Error::Domain(format!("fluid probe needs nu <= {MAX_NU}, got {}", p.nu)));
    }
    let fc = fluid_cycle(p)?;
    let smax = fc.smax;
    let b = cfg.batches;
    let mut rec = PhaseRecorder {
        thr: scale_threshold(p.nu) as u64,
        smax: smax as u64,
        slow: (0..=smax).map(|j| (j as f64) * p.mu < p.lambda).collect(),
        nu: p.nu,
        len: vec![0.0; b],
        unstable: vec![0.0; b],
        stable: vec![0.0; b],
        normal: vec![0.0; b],
        occ: vec![vec![0.0; b]; smax + 2],
        open: None,
        drains: vec![Vec::new(); smax + 1],
    };
    let events = run(cfg, &mut rec);
    let cap = smax as f64 * p.mu - p.lambda;
    let drains = fc
        .sminus
        .iter()
        .map(|&j| DrainStat {
            speed: j,
            count: rec.drains[j].len(),
            mean: batch_estimate(&format!("drain_{j}"), &rec.drains[j]),
            expected: (p.lambda - j as f64 * p.mu) / cap,
        })
        .collect();
    Ok(FluidProbe {
        threshold: rec.thr as usize,
        fluid_unstable: fraction("fluid_unstable", &rec.unstable, &rec.len),
        fluid_stable: fraction("fluid_stable", &rec.stable, &rec.len),
        normal: fraction("normal", &rec.normal, &rec.len),
        occupancy: rec
            .occ
            .iter()
            .enumerate()
            .map(|(j, o)| fraction(&format!("speed_{j}"), o, &rec.len))
            .collect(),
        sigma: fc.sigma.clone(),
        drains,
        events,
    })
}
