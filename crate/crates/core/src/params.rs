//! Model parameters shared by every solver.
//!
//! All rates are per unit time. There is no unit conversion anywhere in the
//! crate, so `lambda = 2, mu = 1` means "arrivals twice as fast as a unit-speed
//! server completes jobs".

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the four Markov models a parameter set describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Speed is reset to the observed queue length, no cap.
    ControllerInfinite,
    /// Speed is reset to `min(queue length, smax)`.
    ControllerFinite,
    /// Single unit-speed server; the Poisson agent only records the queue length.
    ObserverMM1,
    /// Infinite-server queue; the Poisson agent only records the queue length.
    ObserverMMInf,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::ControllerInfinite => "infinite",
            Variant::ControllerFinite => "finite",
            Variant::ObserverMM1 => "observer-mm1",
            Variant::ObserverMMInf => "observer-mminf",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "infinite" => Ok(Variant::ControllerInfinite),
            "finite" => Ok(Variant::ControllerFinite),
            "observer-mm1" => Ok(Variant::ObserverMM1),
            "observer-mminf" => Ok(Variant::ObserverMMInf),
            other => Err(Error::Domain(format!("unknown variant `{other}`"))),
        }
    }
}

/// Maximum server speed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaxSpeed {
    Finite(usize),
    Infinite,
}

impl MaxSpeed {
    pub fn finite(self) -> Option<usize> {
        match self {
            MaxSpeed::Finite(s) => Some(s),
            MaxSpeed::Infinite => None,
        }
    }
}

impl fmt::Display for MaxSpeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxSpeed::Finite(s) => write!(f, "{s}"),
            MaxSpeed::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub smax: MaxSpeed,
    pub variant: Variant,
}

/// Load ratio `lambda / mu` together with the ergodicity verdict for the variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rho {
    pub value: f64,
    pub ergodic: bool,
}

impl ModelParams {
    pub fn infinite(lambda: f64, mu: f64, nu: f64) -> Self {
        ModelParams {
            lambda,
            mu,
            nu,
            smax: MaxSpeed::Infinite,
            variant: Variant::ControllerInfinite,
        }
    }

    pub fn finite(lambda: f64, mu: f64, nu: f64, smax: usize) -> Self {
        ModelParams {
            lambda,
            mu,
            nu,
            smax: MaxSpeed::Finite(smax),
            variant: Variant::ControllerFinite,
        }
    }

    pub fn observer_mm1(lambda: f64, mu: f64, nu: f64) -> Self {
        ModelParams {
            lambda,
            mu,
            nu,
            smax: MaxSpeed::Infinite,
            variant: Variant::ObserverMM1,
        }
    }

    pub fn observer_mminf(lambda: f64, mu: f64, nu: f64) -> Self {
        ModelParams {
            lambda,
            mu,
            nu,
            smax: MaxSpeed::Infinite,
            variant: Variant::ObserverMMInf,
        }
    }

    /// Copy of `self` with a different control rate.
    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn rho(&self) -> Rho {
        let value = self.lambda / self.mu;
        let ergodic = match self.variant {
            Variant::ControllerInfinite | Variant::ObserverMMInf => true,
            Variant::ObserverMM1 => self.lambda < self.mu,
            Variant::ControllerFinite => match self.smax {
                MaxSpeed::Finite(s) => self.lambda < s as f64 * self.mu,
                MaxSpeed::Infinite => true,
            },
        };
        Rho { value, ergodic }
    }

    /// Finite max speed, or an error for the uncapped variants.
    pub fn smax_finite(&self) -> Result<usize> {
        self.smax.finite().ok_or(Error::VariantMismatch {
            variant: self.variant.name(),
            smax: self.smax.to_string(),
        })
    }

    /// Full validation for steady-state solvers.
    pub fn validate(self) -> Result<Self> {
        let unstable = self.validate_for_simulation()?;
        if unstable {
            let s = self.smax_finite()?;
            return Err(Error::UnstableFinite {
                lambda: self.lambda,
                capacity: s as f64 * self.mu,
            });
        }
        Ok(self)
    }

    /// Validation for transient use (simulation). Returns `true` when the
    /// parameters describe a non-ergodic finite-speed controller; such
    /// parameters are allowed here but have no steady state.
    pub fn validate_for_simulation(&self) -> Result<bool> {
        for (name, value) in [("lambda", self.lambda), ("mu", self.mu), ("nu", self.nu)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveRate { name, value });
            }
        }
        let mismatch = || Error::VariantMismatch {
            variant: self.variant.name(),
            smax: self.smax.to_string(),
        };
        match (self.variant, self.smax) {
            (Variant::ControllerFinite, MaxSpeed::Finite(s)) if s >= 1 => {}
            (Variant::ControllerFinite, _) => return Err(mismatch()),
            (Variant::ControllerInfinite, MaxSpeed::Infinite) => {}
            (Variant::ControllerInfinite, _) => return Err(mismatch()),
            (Variant::ObserverMM1 | Variant::ObserverMMInf, _) => {}
        }
        if self.variant == Variant::ObserverMM1 && self.lambda >= self.mu {
            return Err(Error::UnstableObserver {
                lambda: self.lambda,
                mu: self.mu,
            });
        }
        Ok(!self.rho().ergodic)
    }
}

/// Service rate used at each speed level of the finite controller.
///
/// The default profile serves at `j * mu` when the speed is `j`. A custom
/// profile replaces those rates with arbitrary strictly increasing values
/// `s_0 < s_1 < ... < s_smax`. Only the block builder, the oracle and the
/// simulator accept custom profiles; the closed-form rate matrix assumes the
/// linear one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    rates: Vec<f64>,
}

impl SpeedProfile {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::NonIncreasingProfile("empty profile".into()));
        }
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::NonIncreasingProfile(format!("{rates:?}")));
        }
        if rates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonIncreasingProfile(format!("{rates:?}")));
        }
        Ok(SpeedProfile { rates })
    }

    /// `s_j = j * mu` for `j = 0..=smax`.
    pub fn linear(mu: f64, smax: usize) -> Self {
        SpeedProfile {
            rates: (0..=smax).map(|j| j as f64 * mu).collect(),
        }
    }

    pub fn smax(&self) -> usize {
        self.rates.len() - 1
    }

    pub fn rate(&self, speed: usize) -> f64 {
        self.rates[speed]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }
}
