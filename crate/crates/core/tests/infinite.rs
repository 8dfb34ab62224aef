use poisson_control::infinite::{
    assemble_joint, balance_residual, cond_dist, cond_mean, functional_eq_residual, limit_nu_inf, series_residual,
    sigma_solve, solve,
};
use poisson_control::oracle;
use poisson_control::ModelParams;

fn interior_grid(n: usize) -> Vec<(f64, f64)> {
    let h = 1.0 / (n + 1) as f64;
    (1..=n)
        .flat_map(|a| (1..=n).map(move |b| (a as f64 * h, b as f64 * h)))
        .collect()
}

/// Law of `[j - A]_+ + B` with `A ~ Geom(a)`, `B ~ Geom(b)`, `P(G = k) = (1 - q) q^k`,
/// built by direct convolution.
fn decomposition_pmf(a: f64, b: f64, j: usize, len: usize) -> Vec<f64> {
    let mut first = vec![0.0; j + 1];
    let mut below = 0.0;
    for k in 0..j {
        let pk = (1.0 - a) * a.powi(k as i32);
        first[j - k] += pk;
        below += pk;
    }
    first[0] += 1.0 - below;
    let geom_b: Vec<f64> = (0..=len).map(|k| (1.0 - b) * b.powi(k as i32)).collect();
    (0..=len)
        .map(|l| (0..=l.min(j)).map(|m| first[m] * geom_b[l - m]).sum())
        .collect()
}

#[test]
fn conditional_law_matches_restart_chain() {
    let p = ModelParams::infinite(1.0, 1.0, 1.0);
    let d = cond_dist(&p, 3, 40).unwrap();
    let chain = oracle::conditional_chain(&p, 3, 40).unwrap();
    let worst = d
        .pmf
        .iter()
        .zip(&chain.pmf)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "worst {worst:e}");
    assert!((chain.mean() - cond_mean(&p, 3)).abs() < 1e-8);
}

#[test]
fn conditional_law_matches_restart_chain_other_rates() {
    let p = ModelParams::infinite(2.0, 1.0, 0.5);
    for j in [1, 2, 5] {
        let d = cond_dist(&p, j, 150).unwrap();
        let chain = oracle::conditional_chain(&p, j, 150).unwrap();
        let worst = d
            .pmf
            .iter()
            .zip(&chain.pmf)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "j={j} worst {worst:e}");
        assert!((chain.mean() - cond_mean(&p, j)).abs() < 1e-8);
    }
}

#[test]
fn decomposition_into_geometrics() {
    for nu in [0.5, 2.0] {
        let p = ModelParams::infinite(1.0, 1.0, nu);
        for j in [1, 3, 7] {
            let d = cond_dist(&p, j, 80).unwrap();
            let conv = decomposition_pmf(d.beta.beta, d.beta.beta_tilde, j, 80);
            let worst = d.pmf.iter().zip(&conv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "nu={nu} j={j} worst {worst:e}");
        }
    }
}

#[test]
fn sigma_matches_oracle_marginals() {
    let p = ModelParams::infinite(1.0, 1.0, 1.0);
    let sv = poisson_control::infinite::sigma_solve_from(&p, 60).unwrap();
    assert!((sv.sigma.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    let orc = oracle::solve(&p, 60).unwrap();
    let speed = orc.dist.speed_marginal();
    let queue = orc.dist.queue_marginal();
    for j in 0..=40 {
        assert!((sv.sigma[j] - speed[j]).abs() < 1e-6);
        assert!((sv.sigma[j] - queue[j]).abs() < 1e-6);
    }
    assert!(sv.residual < 1e-12);
}

#[test]
fn joint_table_matches_oracle() {
    for (p, qmax) in [
        (ModelParams::infinite(1.0, 1.0, 1.0), 60),
        (ModelParams::infinite(2.0, 1.0, 0.5), 130),
    ] {
        let sol = solve(&p).unwrap();
        let orc = oracle::solve(&p, qmax).unwrap();
        let table = assemble_joint(&p, &sol.sigma, qmax).unwrap();
        let worst = table.max_abs_diff(&orc.dist);
        assert!(worst < 1e-6, "{p:?}: {worst:e}");
        assert!((sol.mean_queue() - orc.dist.mean_queue()).abs() < 1e-6);
    }
}

#[test]
fn marginal_symmetry_local_balance_and_mean() {
    for p in [
        ModelParams::infinite(1.0, 1.0, 1.0),
        ModelParams::infinite(2.0, 1.0, 0.5),
    ] {
        let sol = solve(&p).unwrap();
        let d = &sol.joint;
        let gamma = d.queue_marginal();
        let sigma = d.speed_marginal();
        for k in 0..gamma.len().min(sigma.len()) {
            assert!((gamma[k] - sigma[k]).abs() < 1e-6);
        }
        for i in 0..d.qmax() {
            let down: f64 = (0..=d.jmax()).map(|j| j as f64 * p.mu * d.get(i + 1, j)).sum();
            assert!((p.lambda * gamma[i] - down).abs() < 1e-6, "level {i}");
        }
        let rho = p.lambda / p.mu;
        assert!(sol.mean_queue() > rho);
        assert!((sol.mean_queue() - sol.mean_speed()).abs() < 1e-6);
    }
}

#[test]
fn functional_equation_residuals() {
    let p = ModelParams::infinite(1.0, 1.0, 1.0);
    let sol = solve(&p).unwrap();
    let grid = interior_grid(7);
    assert!(functional_eq_residual(&sol.joint, &p, &grid) < 1e-6);
    // x = 1: nu (P(1,y) - P(y,1))
    for y in [0.1, 0.5, 0.9] {
        assert!(series_residual(&sol.joint, &p, 1.0, y) < 1e-6);
    }
    // the two routes agree and the balance route is fine at x = 0
    for &(x, y) in &grid {
        let a = series_residual(&sol.joint, &p, x, y);
        let b = balance_residual(&sol.joint, &p, x, y);
        assert!((a - b).abs() < 1e-9);
    }
    assert!(functional_eq_residual(&sol.joint, &p, &[(0.0, 0.5), (0.01, 0.3)]) < 1e-6);
}

#[test]
fn y_equal_one_relation() {
    // x lambda P(x,1) = mu d/dy [P(x,y) - P(0,y)] at y = 1
    let p = ModelParams::infinite(2.0, 1.0, 0.5);
    let sol = solve(&p).unwrap();
    let d = &sol.joint;
    for x in [0.2, 0.5, 0.8] {
        let lhs = x * p.lambda * d.pgf_eval(x, 1.0).unwrap().value;
        let mut rhs = 0.0;
        for i in 1..=d.qmax() {
            for j in 0..=d.jmax() {
                rhs += p.mu * j as f64 * d.get(i, j) * x.powi(i as i32);
            }
        }
        assert!((lhs - rhs).abs() < 1e-6);
    }
}

#[test]
fn fast_control_limit() {
    let base = ModelParams::infinite(1.0, 1.0, 1.0);
    let limit = limit_nu_inf(&base).unwrap();
    let tv3 = solve(&base.with_nu(1e3)).unwrap().joint.tv_distance(&limit);
    let tv4 = solve(&base.with_nu(1e4)).unwrap().joint.tv_distance(&limit);
    assert!(tv3 < 0.05, "tv3 {tv3}");
    assert!(tv4 < tv3, "tv4 {tv4} tv3 {tv3}");
}

#[test]
fn sigma_truncation_grows_when_needed() {
    let p = ModelParams::infinite(2.0, 1.0, 0.5);
    let sv = sigma_solve(&p).unwrap();
    assert!(sv.tail_mass < 1e-9);
    assert!(sv.n >= 40);
}
