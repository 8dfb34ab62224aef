use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::params::{ModelParams, SpeedProfile, Variant};

use super::SimConfig;

/// What the engine reports while it runs.
pub trait Recorder {
    /// The state `(q, s)` was held for `len` time units inside batch `batch`.
    fn hold(&mut self, batch: usize, len: f64, q: u64, s: u64);

    /// A control instant at time `t` (after warmup) that saw `q` and moved the
    /// speed from `before` to `after`.
    fn control(&mut self, _t: f64, _batch: usize, _q: u64, _before: u64, _after: u64) {}

    /// An arrival that found `q` customers, at time `t` (after warmup).
    fn arrival(&mut self, _t: f64, _q: u64) {}

    /// A departure that left `q` customers, at time `t` (after warmup).
    fn departure(&mut self, _t: f64, _q: u64) {}
}

pub(crate) struct Dynamics {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub variant: Variant,
    pub cap: Option<u64>,
    pub profile: Option<Vec<f64>>,
}

impl Dynamics {
    pub fn new(p: &ModelParams, profile: Option<&SpeedProfile>) -> Self {
        Dynamics {
            lambda: p.lambda,
            mu: p.mu,
            nu: p.nu,
            variant: p.variant,
            cap: p.smax.finite().map(|s| s as u64),
            profile: profile.map(|s| s.rates().to_vec()),
        }
    }

    #[inline]
    pub fn departure_rate(&self, q: u64, s: u64) -> f64 {
        if q == 0 {
            return 0.0;
        }
        match self.variant {
            Variant::ControllerInfinite => s as f64 * self.mu,
            Variant::ControllerFinite => match &self.profile {
                Some(r) => r[s as usize],
                None => s as f64 * self.mu,
            },
            Variant::ObserverMM1 => self.mu,
            Variant::ObserverMMInf => q as f64 * self.mu,
        }
    }

    #[inline]
    pub fn target(&self, q: u64) -> u64 {
        match self.cap {
            Some(c) if self.variant == Variant::ControllerFinite => q.min(c),
            _ => q,
        }
    }
}

/// Runs one replication from the empty state `(0, 0)` and returns the number
/// of events.
///
/// After every event the three clocks are redrawn as one exponential of the
/// total rate plus a uniform choice, which is exact by memorylessness.
pub fn run(cfg: &SimConfig, rec: &mut impl Recorder) -> u64 {
    let dynamics = Dynamics::new(&cfg.params, cfg.profile.as_ref());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.replication);
    let span = cfg.horizon - cfg.warmup;
    let width = span / cfg.batches as f64;
    let (mut q, mut s) = (0u64, 0u64);
    let mut t = 0.0;
    let mut events = 0u64;
    let lam = dynamics.lambda;
    let nu = dynamics.nu;
    while t < cfg.horizon {
        let dep = dynamics.departure_rate(q, s);
        let total = lam + dep + nu;
        let dt: f64 = rng.sample::<f64, _>(Exp1) / total;
        let end = (t + dt).min(cfg.horizon);
        // split the holding interval over the batch windows it touches
        let mut a = t.max(cfg.warmup);
        while a < end {
            let b = (((a - cfg.warmup) / width) as usize).min(cfg.batches - 1);
            let edge = if b + 1 == cfg.batches {
                cfg.horizon
            } else {
                cfg.warmup + (b + 1) as f64 * width
            };
            let stop = end.min(edge);
            if stop > a {
                rec.hold(b, stop - a, q, s);
            }
            a = stop;
        }
        t += dt;
        if t >= cfg.horizon {
            break;
        }
        events += 1;
        let u = rng.random::<f64>() * total;
        if u < lam {
            if t >= cfg.warmup {
                rec.arrival(t, q);
            }
            q += 1;
        } else if u < lam + dep {
            q -= 1;
            if t >= cfg.warmup {
                rec.departure(t, q);
            }
        } else {
            let next = dynamics.target(q);
            if t >= cfg.warmup {
                let b = (((t - cfg.warmup) / width) as usize).min(cfg.batches - 1);
                rec.control(t, b, q, s, next);
            }
            s = next;
        }
    }
    events
}
