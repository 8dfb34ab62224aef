use crate::error::{Error, Result};
use crate::joint::JointDist;
use crate::params::ModelParams;

/// Fast-control limit: the speed tracks the queue exactly, so the law sits on
/// the diagonal with Poisson(rho) weights, `pi[i][i] = e^-rho rho^i / i!`.
pub fn limit_nu_inf(p: &ModelParams) -> Result<JointDist> {
    let rho = p.lambda / p.mu;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain(format!("rho = {rho}")));
    }
    let mut weights = Vec::new();
    let mut w = (-rho).exp();
    let mut cum = 0.0;
    let mut i = 0usize;
    // past the mode, stop once the remaining mass is negligible
    loop {
        weights.push(w);
        cum += w;
        if i as f64 > rho && 1.0 - cum < 1e-16 {
            break;
        }
        i += 1;
        w *= rho / i as f64;
        if i > 100_000 {
            break;
        }
    }
    let n = weights.len() - 1;
    JointDist::from_entries(n, n, weights.into_iter().enumerate().map(|(i, w)| ((i, i), w)))
}

/// Conjectured slow-control limit of the pgf of `(nu Q, nu S)`:
///
/// ```text
/// 1/2 / (1 - lambda ln x) + 1/2 / (1 - lambda ln y)
/// ```
///
/// This is an unproven limit. The crate only measures simulated agreement
/// with it and never relies on it.
pub fn conjecture_pgf(x: f64, y: f64, lambda: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0 && y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(format!(
            "conjecture pgf needs (x, y) in (0,1]^2, got ({x}, {y})"
        )));
    }
    Ok(0.5 / (1.0 - lambda * x.ln()) + 0.5 / (1.0 - lambda * y.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_diagonal() {
        let d = limit_nu_inf(&ModelParams::infinite(1.0, 1.0, 1.0)).unwrap();
        assert!((d.get(0, 0) - (-1.0f64).exp()).abs() < 1e-16);
        assert!((d.get(3, 3) - (-1.0f64).exp() / 6.0).abs() < 1e-16);
        assert_eq!(d.get(3, 2), 0.0);
        assert!(d.mass_deficit().abs() < 1e-15);
        let z = d.pgf_eval(0.4, 0.7).unwrap().value;
        assert!((z - (0.28f64 - 1.0).exp()).abs() < 1e-14);
    }

    #[test]
    fn conjecture_values() {
        assert_eq!(conjecture_pgf(1.0, 1.0, 1.0).unwrap(), 1.0);
        let lam = 2.0;
        let v = conjecture_pgf(1.0, (-1.0f64 / lam).exp(), lam).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
        assert!(conjecture_pgf(0.0, 0.5, 1.0).is_err());
        assert!(conjecture_pgf(0.5, 0.0, 1.0).is_err());
    }
}
