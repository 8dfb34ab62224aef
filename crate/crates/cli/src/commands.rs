use poisson_control::analytic;
use poisson_control::infinite;
use poisson_control::observers::{
    mm1_obs_pgf, mm1_obs_residual, mminf_obs_pgf, mminf_obs_pgf_integral, mminf_obs_residual, Mm1ObserverForm,
    MmInfObserverForm,
};
use poisson_control::oracle;
use poisson_control::qbd::{self, QbdSolution};
use poisson_control::sim::{conjecture_probe, fluid_probe, simulate_replications, SimConfig};
use poisson_control::{JointDist, ModelParams, Variant};
use rayon::prelude::*;

use crate::error::CliError;
use crate::report::{Cell, Report, Table};
use crate::spec::{parse_nu_range, Probe, RunSpec};

const PGF_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn interior_grid() -> Vec<(f64, f64)> {
    let pts: Vec<f64> = (1..=7).map(|k| k as f64 / 8.0).collect();
    pts.iter().flat_map(|&x| pts.iter().map(move |&y| (x, y))).collect()
}

/// Steady-state parameters: rejects non-ergodic sets.
fn steady_params(spec: &RunSpec) -> Result<ModelParams, CliError> {
    Ok(spec.params()?.validate()?)
}

fn summary_table(s: &analytic::Summary, table: &JointDist) -> Table {
    let mut t = Table::new("summary", &["quantity", "value"]);
    t.push(vec!["EQ".into(), s.mean_queue.into()]);
    t.push(vec!["ES".into(), s.mean_speed.into()]);
    t.push(vec!["P0".into(), s.prob_empty.into()]);
    t.push(vec!["pi00".into(), table.get(0, 0).into()]);
    t.push(vec!["table_qmax".into(), table.qmax().into()]);
    t.push(vec!["table_jmax".into(), table.jmax().into()]);
    t.push(vec!["mass_deficit".into(), table.mass_deficit().into()]);
    t
}

fn pgf_grid(p: &ModelParams) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let pts = PGF_GRID.iter().flat_map(|&x| PGF_GRID.iter().map(move |&y| (x, y)));
    let out = match p.variant {
        Variant::ControllerInfinite => {
            let d = analytic::joint_tol(p, 1e-14)?;
            pts.map(|(x, y)| Ok((x, y, d.pgf_eval(x, y)?.value)))
                .collect::<Result<_, CliError>>()?
        }
        Variant::ControllerFinite => {
            let sol = qbd::solve_boundary(p)?;
            pts.map(|(x, y)| (x, y, qbd::qbd_to_pgf(&sol, x, y))).collect()
        }
        Variant::ObserverMM1 => {
            let f = Mm1ObserverForm::new(p)?;
            pts.map(|(x, y)| Ok((x, y, mm1_obs_pgf(&f, x, y)?)))
                .collect::<Result<_, CliError>>()?
        }
        Variant::ObserverMMInf => {
            let f = MmInfObserverForm::new(p)?;
            pts.map(|(x, y)| (x, y, mminf_obs_pgf(&f, x, y))).collect()
        }
    };
    Ok(out)
}

pub fn solve(spec: &RunSpec) -> Result<Report, CliError> {
    let p = steady_params(spec)?;
    let table = match spec.qmax {
        Some(q) => analytic::joint_at(&p, q)?,
        None => analytic::joint_tol(&p, spec.tol)?,
    };
    let s = analytic::summary(&p)?;
    let mut rep = Report::new(spec);
    rep.add(summary_table(&s, &table));

    let mut m = Table::new("marginals", &["n", "queue", "speed"]);
    let (qm, sm) = (table.queue_marginal(), table.speed_marginal());
    for n in 0..qm.len().max(sm.len()) {
        m.push(vec![
            n.into(),
            qm.get(n).copied().unwrap_or(0.0).into(),
            sm.get(n).copied().unwrap_or(0.0).into(),
        ]);
    }
    rep.add(m);

    let mut j = Table::new("joint", &["i", "j", "pi"]);
    for (a, b, v) in table.entries() {
        if v > 0.0 {
            j.push(vec![a.into(), b.into(), v.into()]);
        }
    }
    rep.add(j);

    let mut g = Table::new("pgf", &["x", "y", "value"]);
    for (x, y, v) in pgf_grid(&p)? {
        g.push(vec![x.into(), y.into(), v.into()]);
    }
    rep.add(g);
    Ok(rep)
}

struct Checks(Table);

impl Checks {
    fn new() -> Self {
        Checks(Table::new("checks", &["check", "value", "tolerance", "pass"]))
    }

    /// Passes when `value < tol`.
    fn below(&mut self, name: &str, value: f64, tol: f64) {
        self.0
            .push(vec![name.into(), value.into(), tol.into(), (value < tol).into()]);
    }

    fn failures(&self) -> Vec<String> {
        self.0
            .rows
            .iter()
            .filter(|r| r[3] != Cell::from(true))
            .map(|r| match &r[0] {
                Cell::Text(s) => s.clone(),
                other => format!("{other:?}"),
            })
            .collect()
    }
}

/// Queue length above which the analytic queue marginal carries less than `tol`.
fn auto_qmax(p: &ModelParams, tol: f64) -> Result<usize, CliError> {
    let d = analytic::joint_tol(p, tol)?;
    let qm = d.queue_marginal();
    let mut tail = d.mass_deficit().max(0.0);
    let mut n = qm.len() - 1;
    while n > 0 && tail + qm[n] < tol {
        tail += qm[n];
        n -= 1;
    }
    Ok(n + 10)
}

pub fn validate(spec: &RunSpec) -> Result<Report, CliError> {
    let p = steady_params(spec)?;
    let qmax = match spec.qmax {
        Some(q) => q,
        None => auto_qmax(&p, 1e-13)?,
    };
    let orc = oracle::solve(&p, qmax)?;
    let s = analytic::summary(&p)?;
    let mut c = Checks::new();

    let table = analytic::joint_at(&p, qmax)?;
    let oracle_tol = if p.variant == Variant::ControllerInfinite {
        1e-6
    } else {
        1e-8
    };
    c.below("oracle_max_abs_diff", table.max_abs_diff(&orc.dist), oracle_tol);
    c.below("oracle_mean_queue", (orc.dist.mean_queue() - s.mean_queue).abs(), 1e-6);
    c.below("oracle_mean_speed", (orc.dist.mean_speed() - s.mean_speed).abs(), 1e-6);
    let grid = interior_grid();

    match p.variant {
        Variant::ControllerInfinite => {
            let full = analytic::joint_tol(&p, 1e-13)?;
            let (qm, sm) = (full.queue_marginal(), full.speed_marginal());
            let worst = (0..qm.len().max(sm.len()))
                .map(|n| (qm.get(n).unwrap_or(&0.0) - sm.get(n).unwrap_or(&0.0)).abs())
                .fold(0.0, f64::max);
            c.below("marginal_equality", worst, 1e-6);
            let local = (0..qm.len().saturating_sub(1))
                .map(|i| {
                    let out: f64 = (0..=full.jmax()).map(|j| j as f64 * p.mu * full.get(i + 1, j)).sum();
                    (p.lambda * qm[i] - out).abs()
                })
                .fold(0.0, f64::max);
            c.below("local_balance", local, 1e-6);
            c.below(
                "functional_eq_residual",
                infinite::functional_eq_residual(&full, &p, &grid),
                1e-6,
            );
            // a strict lower bound, recorded as rho - EQ < 0
            c.below("rho_minus_EQ", p.lambda / p.mu - s.mean_queue, 0.0);
        }
        Variant::ControllerFinite => {
            let sol: QbdSolution = qbd::solve_boundary(&p)?;
            let blocks = qbd::build_blocks(&p, None)?;
            c.below("r_residual", sol.r.residual(&blocks), 1e-10);
            c.below("balance_residual", sol.balance_residual(qmax)?, 1e-10);
            if sol.smax() == 1 {
                let cf = qbd::closed_form_s1(&p)?;
                let worst = (0..=qmax)
                    .flat_map(|n| (0..=1).map(move |j| (n, j)))
                    .map(|(n, j)| (cf.pi(n, j) - sol.level(n)[j]).abs())
                    .fold(0.0, f64::max);
                c.below("s1_closed_form", worst, 1e-10);
            }
        }
        Variant::ObserverMM1 => {
            let f = Mm1ObserverForm::new(&p)?;
            let mut worst: f64 = 0.0;
            for &(x, y) in &grid {
                worst = worst.max(mm1_obs_residual(&f, x, y)?);
            }
            c.below("functional_eq_residual", worst, 1e-9);
        }
        Variant::ObserverMMInf => {
            let f = MmInfObserverForm::new(&p)?;
            let mut diff: f64 = 0.0;
            let mut res: f64 = 0.0;
            for &(x, y) in &grid {
                diff = diff.max((mminf_obs_pgf(&f, x, y) - mminf_obs_pgf_integral(&p, x, y)?).abs());
                res = res.max(mminf_obs_residual(&f, x, y));
            }
            c.below("series_vs_integral", diff, 1e-10);
            c.below("functional_eq_residual", res, 1e-9);
        }
    }

    if spec.simulate {
        let mut cfg = SimConfig::new(p, spec.horizon, spec.seed);
        cfg.batches = spec.batches;
        let r = simulate_replications(&cfg, 1)?.remove(0);
        for (name, exact) in [("EQ", s.mean_queue), ("ES", s.mean_speed)] {
            let e = r.estimate(name).expect("standard estimate");
            // distance in half-widths; three keeps a single run's false alarms rare
            c.below(
                &format!("sim_{name}_halfwidths"),
                (e.point - exact).abs() / e.half_width,
                3.0,
            );
        }
    }

    let failures = c.failures();
    let mut rep = Report::new(spec);
    let mut info = Table::new("oracle", &["quantity", "value"]);
    info.push(vec!["qmax".into(), qmax.into()]);
    info.push(vec!["boundary_mass".into(), orc.boundary_mass.into()]);
    info.push(vec!["generator_residual".into(), orc.residual.into()]);
    rep.add(info);
    rep.add(c.0);
    if failures.is_empty() {
        Ok(rep)
    } else {
        rep.emit()?;
        Err(CliError::Validation(failures.join(", ")))
    }
}

pub fn sweep(spec: &RunSpec) -> Result<Report, CliError> {
    let base = spec.params()?;
    if base.variant != Variant::ControllerFinite {
        return Err(CliError::Invalid("sweep needs --variant finite".into()));
    }
    let range = spec
        .nu_range
        .as_deref()
        .ok_or_else(|| CliError::Invalid("sweep needs --nu-range a:b:steps".into()))?;
    let nus = parse_nu_range(range)?;
    let rows: Vec<[f64; 5]> = nus
        .par_iter()
        .map(|&nu| -> Result<[f64; 5], CliError> {
            let p = base.with_nu(nu).validate()?;
            let sol = qbd::solve_boundary(&p)?;
            let (eq, es) = (sol.mean_queue(), sol.mean_speed());
            let mut q = sol.smax().max(10);
            while sol.tail_mass(q) >= 1e-13 {
                q = q * 3 / 2;
            }
            let orc = oracle::solve(&p, spec.qmax.unwrap_or(q + 10))?;
            Ok([
                nu,
                eq,
                es,
                (orc.dist.mean_queue() - eq).abs(),
                (orc.dist.mean_speed() - es).abs(),
            ])
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new("sweep", &["nu", "EQ", "ES", "EQ_err", "ES_err"]);
    for r in rows {
        t.push(r.iter().map(|&v| Cell::from(v)).collect());
    }
    let mut rep = Report::new(spec);
    rep.add(t);
    Ok(rep)
}

pub fn simulate(spec: &RunSpec) -> Result<Report, CliError> {
    let p = spec.params()?;
    let mut cfg = SimConfig::new(p, spec.horizon, spec.seed);
    cfg.batches = spec.batches;
    let mut rep = Report::new(spec);
    match spec.probe {
        Some(Probe::Conjecture) => {
            cfg.scaled = true;
            let r = conjecture_probe(&cfg)?;
            let mut t = Table::new("conjecture", &["quantity", "point", "half_width", "reference"]);
            let lam = p.lambda;
            for (e, reference) in [(&r.q_axis, 0.5), (&r.s_axis, 0.5), (&r.q_mean, lam), (&r.s_mean, lam)] {
                t.push(vec![
                    e.name.clone().into(),
                    e.point.into(),
                    e.half_width.into(),
                    reference.into(),
                ]);
            }
            for s in &r.pgf {
                let e = &s.empirical;
                t.push(vec![
                    e.name.clone().into(),
                    e.point.into(),
                    e.half_width.into(),
                    s.conjecture.into(),
                ]);
            }
            t.push(vec![
                "threshold".into(),
                (r.threshold as f64).into(),
                0.0.into(),
                f64::NAN.into(),
            ]);
            rep.add(t);
        }
        Some(Probe::Fluid) => {
            let r = fluid_probe(&cfg)?;
            let mut t = Table::new("fluid", &["quantity", "point", "half_width", "reference"]);
            for e in [&r.fluid_unstable, &r.fluid_stable, &r.normal] {
                t.push(vec![
                    e.name.clone().into(),
                    e.point.into(),
                    e.half_width.into(),
                    f64::NAN.into(),
                ]);
            }
            for (e, s) in r.occupancy.iter().zip(&r.sigma) {
                t.push(vec![
                    e.name.clone().into(),
                    e.point.into(),
                    e.half_width.into(),
                    (*s).into(),
                ]);
            }
            for d in &r.drains {
                let e = &d.mean;
                t.push(vec![
                    e.name.clone().into(),
                    e.point.into(),
                    e.half_width.into(),
                    d.expected.into(),
                ]);
            }
            t.push(vec![
                "threshold".into(),
                (r.threshold as f64).into(),
                0.0.into(),
                f64::NAN.into(),
            ]);
            rep.add(t);
        }
        None => {
            let exact = p.validate().ok().and_then(|p| analytic::summary(&p).ok());
            let runs = simulate_replications(&cfg, spec.replications.max(1))?;
            let mut t = Table::new("estimates", &["replication", "name", "point", "half_width", "analytic"]);
            let mut info = Table::new("runs", &["replication", "events", "unstable"]);
            for (k, r) in runs.iter().enumerate() {
                for e in &r.estimates {
                    let a = match (exact, e.name.as_str()) {
                        (Some(s), "EQ") => s.mean_queue,
                        (Some(s), "ES") => s.mean_speed,
                        (Some(s), "P0") => s.prob_empty,
                        _ => f64::NAN,
                    };
                    t.push(vec![
                        k.into(),
                        e.name.clone().into(),
                        e.point.into(),
                        e.half_width.into(),
                        a.into(),
                    ]);
                }
                info.push(vec![k.into(), r.events.into(), r.unstable.into()]);
            }
            rep.add(t);
            rep.add(info);
        }
    }
    Ok(rep)
}
