//! Models where the controller only records the queue length.
//!
//! The server is an ordinary M/M/1 or M/M/inf queue; `S` is the queue length
//! seen at the last Poisson inspection. The joint law of `(Q, S)` is that of
//! the queue at two times an exponential lag apart, so both tables are
//! symmetric.

mod mm1;
mod mminf;
mod quad;

pub use mm1::{mm1_obs_joint, mm1_obs_pgf, mm1_obs_residual, Mm1ObserverForm};
pub use mminf::{
    mminf_obs_joint, mminf_obs_pgf, mminf_obs_pgf_dx, mminf_obs_pgf_integral, mminf_obs_residual, MmInfObserverForm,
};
pub use quad::{integrate, integrate_vec};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use proptest::prelude::*;

    fn grid() -> Vec<(f64, f64)> {
        let pts = [0.0, 0.25, 0.5, 0.75, 1.0];
        pts.iter().flat_map(|&x| pts.iter().map(move |&y| (x, y))).collect()
    }

    #[test]
    fn mm1_root_and_margins() {
        let p = ModelParams::observer_mm1(1.0, 2.0, 1.0);
        let f = Mm1ObserverForm::new(&p).unwrap();
        assert!(f.quadratic_residual().abs() < 1e-12);
        assert!(f.x1 > 0.0 && f.x1 < 1.0);
        assert!((mm1_obs_pgf(&f, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        for x in [0.0, 0.3, 0.9] {
            let want = (2.0 - 1.0) / (2.0 - x);
            assert!((mm1_obs_pgf(&f, x, 1.0).unwrap() - want).abs() < 1e-14);
            assert!((mm1_obs_pgf(&f, 1.0, x).unwrap() - want).abs() < 1e-14);
        }
        assert!(mm1_obs_pgf(&f, 1.1, 0.5).is_err());
    }

    #[test]
    fn mm1_matches_unreduced_form() {
        let p = ModelParams::observer_mm1(0.7, 1.3, 0.4);
        let f = Mm1ObserverForm::new(&p).unwrap();
        let (lam, mu, nu) = (0.7, 1.3, 0.4);
        for &(x, y) in &[(0.2, 0.4), (0.8, 0.9), (0.95, 0.1)] {
            let k = 1.0 - 1.0 / x;
            let num =
                k / (1.0 / f.x1 - 1.0) * nu * (mu - lam) / (mu - lam * f.x1 * y) + nu * (mu - lam) / (mu - lam * x * y);
            let den = nu + lam * (1.0 - x) + mu * k;
            assert!((num / den - mm1_obs_pgf(&f, x, y).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn mm1_table_sums_to_pgf() {
        let p = ModelParams::observer_mm1(1.0, 2.0, 1.0);
        let f = Mm1ObserverForm::new(&p).unwrap();
        let d = mm1_obs_joint(&p, 80, 80).unwrap();
        assert!(d.mass_deficit().abs() < 1e-13);
        for &(x, y) in &grid() {
            let series = d.pgf_eval(x, y).unwrap().value;
            assert!((series - mm1_obs_pgf(&f, x, y).unwrap()).abs() < 1e-13);
        }
        let geo: Vec<f64> = (0..=80).map(|k| 0.5 * 0.5f64.powi(k)).collect();
        for (a, b) in d.queue_marginal().iter().zip(&geo) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in d.speed_marginal().iter().zip(&geo) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn mm1_limits() {
        let (lam, mu) = (1.0, 2.0);
        let fast = Mm1ObserverForm::new(&ModelParams::observer_mm1(lam, mu, 1e9)).unwrap();
        let slow = Mm1ObserverForm::new(&ModelParams::observer_mm1(lam, mu, 1e-9)).unwrap();
        for &(x, y) in &grid() {
            let diag = (mu - lam) / (mu - lam * x * y);
            let indep = (mu - lam) * (mu - lam) / ((mu - lam * x) * (mu - lam * y));
            assert!((mm1_obs_pgf(&fast, x, y).unwrap() - diag).abs() < 1e-7);
            assert!((mm1_obs_pgf(&slow, x, y).unwrap() - indep).abs() < 1e-7);
        }
    }

    #[test]
    fn mminf_margins_and_limits() {
        let p = ModelParams::observer_mminf(1.5, 1.0, 0.8);
        let f = MmInfObserverForm::new(&p).unwrap();
        assert_eq!(f.h[0], 1.0);
        assert!(f.h.iter().all(|&v| v > 0.0));
        assert!((mminf_obs_pgf(&f, 1.0, 1.0) - 1.0).abs() < 1e-15);
        for x in [0.0, 0.4, 0.9] {
            assert!((mminf_obs_pgf(&f, x, 1.0) - (1.5 * (x - 1.0)).exp()).abs() < 1e-15);
        }
        let fast = MmInfObserverForm::new(&p.with_nu(1e10)).unwrap();
        let slow = MmInfObserverForm::new(&p.with_nu(1e-10)).unwrap();
        for &(x, y) in &grid() {
            let diag = (1.5 * (x * y - 1.0)).exp();
            let indep = (1.5 * (x - 1.0)).exp() * (1.5 * (y - 1.0)).exp();
            assert!((mminf_obs_pgf(&fast, x, y) - diag).abs() < 1e-8);
            assert!((mminf_obs_pgf(&slow, x, y) - indep).abs() < 1e-8);
        }
    }

    #[test]
    fn mminf_integral_form() {
        let p = ModelParams::observer_mminf(1.0, 1.0, 1.0);
        let f = MmInfObserverForm::new(&p).unwrap();
        assert!((mminf_obs_pgf_integral(&p, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        for &(x, y) in &grid() {
            let series = mminf_obs_pgf(&f, x, y);
            assert!((mminf_obs_pgf_integral(&p, x, y).unwrap() - series).abs() < 1e-10);
            // nu = mu: h(w) = (e^{rho w} - 1) / (rho w)
            let w = (x - 1.0) * (y - 1.0);
            let h = if w == 0.0 { 1.0 } else { w.exp_m1() / w };
            let closed = (x - 1.0).exp() * (y - 1.0).exp() * h;
            assert!((series - closed).abs() < 1e-14);
        }
        let slow = ModelParams::observer_mminf(2.0, 1.0, 0.1);
        let fs = MmInfObserverForm::new(&slow).unwrap();
        for &(x, y) in &grid() {
            assert!((mminf_obs_pgf_integral(&slow, x, y).unwrap() - mminf_obs_pgf(&fs, x, y)).abs() < 1e-10);
        }
    }

    #[test]
    fn mminf_table_sums_to_pgf() {
        let p = ModelParams::observer_mminf(1.0, 1.0, 1.0);
        let f = MmInfObserverForm::new(&p).unwrap();
        let d = mminf_obs_joint(&p, 25, 25).unwrap();
        assert!(d.mass_deficit() < 1e-13);
        for &(x, y) in &grid() {
            assert!((d.pgf_eval(x, y).unwrap().value - mminf_obs_pgf(&f, x, y)).abs() < 1e-12);
        }
        for (k, v) in d.queue_marginal().iter().enumerate().take(15) {
            let pois = (-1.0f64).exp() / (1..=k).map(|i| i as f64).product::<f64>();
            assert!((v - pois).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_residual_free(
            lam in 0.1f64..0.95, nu in 0.05f64..10.0, x in 0.01f64..1.0, y in 0.0f64..1.0
        ) {
            let p1 = ModelParams::observer_mm1(lam, 1.0, nu);
            let f1 = Mm1ObserverForm::new(&p1).unwrap();
            prop_assert!((mm1_obs_pgf(&f1, x, y).unwrap() - mm1_obs_pgf(&f1, y, x).unwrap()).abs() < 1e-12);
            prop_assert!(mm1_obs_residual(&f1, x, y).unwrap() < 1e-9);
            let pi = ModelParams::observer_mminf(3.0 * lam, 1.0, nu);
            let fi = MmInfObserverForm::new(&pi).unwrap();
            prop_assert!((mminf_obs_pgf(&fi, x, y) - mminf_obs_pgf(&fi, y, x)).abs() < 1e-12);
            prop_assert!(mminf_obs_residual(&fi, x, y) < 1e-9);
        }
    }
}
