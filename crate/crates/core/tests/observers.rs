use poisson_control::observers::{mm1_obs_joint, mminf_obs_joint};
use poisson_control::oracle;
use poisson_control::ModelParams;

#[test]
fn mm1_observer_matches_oracle() {
    for (lam, mu, nu, qmax) in [(1.0, 2.0, 1.0, 70), (0.8, 1.0, 0.3, 140), (0.5, 1.0, 6.0, 70)] {
        let p = ModelParams::observer_mm1(lam, mu, nu);
        let orc = oracle::solve(&p, qmax).unwrap();
        let table = mm1_obs_joint(&p, qmax, qmax).unwrap();
        let worst = table.max_abs_diff(&orc.dist);
        assert!(worst < 1e-8, "{p:?}: {worst:e}");
        assert!(table.entries().all(|(_, _, v)| v >= -1e-12));
    }
}

#[test]
fn mminf_observer_matches_oracle() {
    for (lam, mu, nu) in [(1.0, 1.0, 1.0), (3.0, 1.0, 0.2), (0.5, 2.0, 5.0)] {
        let p = ModelParams::observer_mminf(lam, mu, nu);
        let qmax = 40;
        let orc = oracle::solve(&p, qmax).unwrap();
        let table = mminf_obs_joint(&p, qmax, qmax).unwrap();
        let worst = table.max_abs_diff(&orc.dist);
        assert!(worst < 1e-8, "{p:?}: {worst:e}");
        assert!(table.entries().all(|(_, _, v)| v >= -1e-12));
        for i in 0..=qmax {
            for j in 0..i {
                assert!((table.get(i, j) - table.get(j, i)).abs() < 1e-14);
            }
        }
    }
}
