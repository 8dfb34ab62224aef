use crate::error::Result;
use crate::joint::JointDist;
use crate::params::ModelParams;

/// Fast-control limit of the capped controller: the speed is always
/// `min(Q, smax)` and the queue is M/M/smax,
/// `pi[q][min(q,s)] = pi00 rho^q / (j! s^(q-j))`.
///
/// The table stops once the geometric tail falls below `1e-16`; the
/// normalizing constant includes the tail exactly.
pub fn limit_nu_inf_finite(p: &ModelParams) -> Result<JointDist> {
    p.validate()?;
    let s = p.smax_finite()?;
    let rho = p.lambda / p.mu;
    let ratio = rho / s as f64;
    let mut w = Vec::new();
    let mut term = 1.0;
    for q in 0..=s {
        if q > 0 {
            term *= rho / q as f64;
        }
        w.push(term);
    }
    let head: f64 = w[..s].iter().sum();
    let z = head + w[s] / (1.0 - ratio);
    let mut last = w[s];
    while last * ratio / (1.0 - ratio) / z >= 1e-16 {
        last *= ratio;
        w.push(last);
    }
    let qmax = w.len() - 1;
    JointDist::from_entries(qmax, s, w.into_iter().enumerate().map(|(q, v)| ((q, q.min(s)), v / z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_server_is_geometric() {
        let d = limit_nu_inf_finite(&ModelParams::finite(0.6, 1.0, 1.0, 1)).unwrap();
        for q in 0..20 {
            assert!((d.get(q, q.min(1)) - 0.4 * 0.6f64.powi(q as i32)).abs() < 1e-15);
        }
        assert_eq!(d.get(3, 0), 0.0);
        assert!(d.mass_deficit().abs() < 1e-15);
    }

    #[test]
    fn erlang_c_empty_probability() {
        // M/M/2 with rho = 1: pi00 = 1 / (1 + 1 + 1/2 * 2) = 1/3
        let d = limit_nu_inf_finite(&ModelParams::finite(1.0, 1.0, 1.0, 2)).unwrap();
        assert!((d.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!(d.mass_deficit() < 1e-15);
    }
}
