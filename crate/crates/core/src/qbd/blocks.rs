use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::params::{ModelParams, SpeedProfile};

/// Generator blocks of the capped controller, levels = queue length, phases =
/// speed `0..=smax`.
///
/// `A0` moves one level up, `A2` one level down, `A1(l)` stays within level
/// `l`. From level `smax` on the blocks no longer depend on the level.
#[derive(Clone, Debug, PartialEq)]
pub struct QbdBlocks {
    pub smax: usize,
    pub lambda: f64,
    pub nu: f64,
    /// Service rate at each speed, the diagonal of `A2`.
    pub rates: Vec<f64>,
}

impl QbdBlocks {
    pub fn a0(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal_element(self.smax + 1, self.smax + 1, self.lambda)
    }

    pub fn a2(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.rates.clone()))
    }

    /// Phase the controller switches to when it inspects level `level`.
    pub fn target(&self, level: usize) -> usize {
        level.min(self.smax)
    }

    /// Within-level block. Level 0 has no departures, so its diagonal is
    /// `-(lambda + nu)`, or `-lambda` in the target phase.
    pub fn a1(&self, level: usize) -> DMatrix<f64> {
        let dim = self.smax + 1;
        let t = self.target(level);
        let mut a = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let service = if level >= 1 { self.rates[j] } else { 0.0 };
            let control = if j == t { 0.0 } else { self.nu };
            a[(j, j)] = -(self.lambda + service + control);
            if j != t {
                a[(j, t)] += self.nu;
            }
        }
        a
    }

    /// Row sums of the generator restricted to `level`: `A0 + A1 + A2`, without
    /// `A2` at level 0.
    pub fn row_sums(&self, level: usize) -> Vec<f64> {
        let mut g = self.a0() + self.a1(level);
        if level >= 1 {
            g += self.a2();
        }
        g.row_iter().map(|r| r.sum()).collect()
    }
}

/// Blocks for the capped controller, with `j * mu` service rates unless a
/// profile is given.
pub fn build_blocks(p: &ModelParams, profile: Option<&SpeedProfile>) -> Result<QbdBlocks> {
    p.validate_for_simulation()?;
    let smax = p.smax_finite()?;
    let rates = match profile {
        Some(s) => {
            // re-check in case the profile was deserialized without `new`
            let s = SpeedProfile::new(s.rates().to_vec())?;
            if s.smax() != smax {
                return Err(Error::Domain(format!(
                    "profile covers speeds 0..={} but smax is {smax}",
                    s.smax()
                )));
            }
            s.rates().to_vec()
        }
        None => SpeedProfile::linear(p.mu, smax).rates().to_vec(),
    };
    Ok(QbdBlocks {
        smax,
        lambda: p.lambda,
        nu: p.nu,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_pattern() {
        let b = build_blocks(&ModelParams::finite(1.0, 1.0, 1.0, 2), None).unwrap();
        let a = b.a1(0);
        assert_eq!(a[(0, 0)], -1.0);
        assert_eq!(a[(1, 1)], -2.0);
        assert_eq!(a[(1, 0)], 1.0);
        assert_eq!(a[(2, 0)], 1.0);
        assert_eq!(b.row_sums(0), vec![0.0; 3]);
    }

    #[test]
    fn conservative_at_every_level() {
        let b = build_blocks(&ModelParams::finite(1.3, 0.7, 2.1, 3), None).unwrap();
        for l in 0..=5 {
            assert!(b.row_sums(l).iter().all(|s| s.abs() < 1e-14), "level {l}");
        }
        assert_eq!(b.a1(3), b.a1(4));
        assert_eq!(b.a1(4), b.a1(9));
    }

    #[test]
    fn profile_rates_and_errors() {
        let p = ModelParams::finite(1.0, 1.0, 1.0, 2);
        let prof = SpeedProfile::new(vec![0.0, 1.5, 2.0]).unwrap();
        let b = build_blocks(&p, Some(&prof)).unwrap();
        assert_eq!(b.a2()[(1, 1)], 1.5);
        let short = SpeedProfile::new(vec![0.0, 1.0]).unwrap();
        assert!(build_blocks(&p, Some(&short)).is_err());
        assert!(build_blocks(&ModelParams::infinite(1.0, 1.0, 1.0), None).is_err());
    }
}
