//! Utility functions of terminal wealth.

use core::fmt;

/// The utility families covered by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec {
    /// `ln x`
    Log,
    /// `x^α`, `0 < α < 1`
    Power { alpha: f64 },
    /// `c - x^α`, `α < 0`. The shift only moves reported utility values.
    PowerNegative { alpha: f64, c: f64 },
    /// `-e^{-αx}/α`, `α > 0`
    Exponential { alpha: f64 },
    /// `x - αx²/2`, `α > 0`; bliss point at `1/α`.
    Quadratic { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum UtilityError {
    #[error("{kind} utility is undefined at nonpositive wealth {x}")]
    Domain { kind: &'static str, x: f64 },
    #[error("invalid risk-aversion parameter alpha={alpha} for {kind} utility")]
    Parameter { kind: &'static str, alpha: f64 },
}

impl UtilitySpec {
    pub fn name(&self) -> &'static str {
        match self {
            UtilitySpec::Log => "log",
            UtilitySpec::Power { .. } => "power",
            UtilitySpec::PowerNegative { .. } => "power_negative",
            UtilitySpec::Exponential { .. } => "exponential",
            UtilitySpec::Quadratic { .. } => "quadratic",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            UtilitySpec::Log => None,
            UtilitySpec::Power { alpha }
            | UtilitySpec::PowerNegative { alpha, .. }
            | UtilitySpec::Exponential { alpha }
            | UtilitySpec::Quadratic { alpha } => Some(alpha),
        }
    }

    /// Log and power utilities are optimized over fractional controls
    /// `(π, κ)`; exponential and quadratic over dollar controls `(π̃, L)`.
    pub fn uses_fractional_control(&self) -> bool {
        matches!(self, UtilitySpec::Log | UtilitySpec::Power { .. } | UtilitySpec::PowerNegative { .. })
    }

    pub fn validate(&self) -> Result<(), UtilityError> {
        let kind = self.name();
        let ok = match *self {
            UtilitySpec::Log => true,
            UtilitySpec::Power { alpha } => alpha > 0.0 && alpha < 1.0,
            UtilitySpec::PowerNegative { alpha, c } => alpha < 0.0 && c.is_finite(),
            UtilitySpec::Exponential { alpha } | UtilitySpec::Quadratic { alpha } => {
                alpha > 0.0 && alpha.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(UtilityError::Parameter { kind, alpha: self.alpha().unwrap_or(f64::NAN) })
        }
    }

    fn check_positive(&self, x: f64) -> Result<(), UtilityError> {
        if self.uses_fractional_control() && !(x > 0.0) {
            Err(UtilityError::Domain { kind: self.name(), x })
        } else {
            Ok(())
        }
    }

    pub fn utility(&self, x: f64) -> Result<f64, UtilityError> {
        self.check_positive(x)?;
        Ok(match *self {
            UtilitySpec::Log => libm::log(x),
            UtilitySpec::Power { alpha } => libm::pow(x, alpha),
            UtilitySpec::PowerNegative { alpha, c } => c - libm::pow(x, alpha),
            UtilitySpec::Exponential { alpha } => -libm::exp(-alpha * x) / alpha,
            UtilitySpec::Quadratic { alpha } => x - 0.5 * alpha * x * x,
        })
    }

    pub fn marginal_utility(&self, x: f64) -> Result<f64, UtilityError> {
        self.check_positive(x)?;
        Ok(match *self {
            UtilitySpec::Log => 1.0 / x,
            UtilitySpec::Power { alpha } => alpha * libm::pow(x, alpha - 1.0),
            UtilitySpec::PowerNegative { alpha, .. } => -alpha * libm::pow(x, alpha - 1.0),
            UtilitySpec::Exponential { alpha } => libm::exp(-alpha * x),
            UtilitySpec::Quadratic { alpha } => 1.0 - alpha * x,
        })
    }

    /// `U'(x) · y`. For the logarithm this is `y / x`, so `x = y` gives
    /// exactly one.
    pub fn marginal_times(&self, x: f64, y: f64) -> Result<f64, UtilityError> {
        match self {
            UtilitySpec::Log => {
                self.check_positive(x)?;
                Ok(y / x)
            }
            _ => Ok(self.marginal_utility(x)? * y),
        }
    }
}

impl fmt::Display for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.alpha() {
            None => write!(f, "{}", self.name()),
            Some(a) => write!(f, "{}(alpha={a})", self.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_at_one() {
        let u = UtilitySpec::Log;
        assert_eq!(u.utility(1.0).unwrap(), 0.0);
        assert_eq!(u.marginal_utility(1.0).unwrap(), 1.0);
    }

    #[test]
    fn quadratic_bliss_point() {
        let u = UtilitySpec::Quadratic { alpha: 2.0 };
        assert_eq!(u.utility(0.5).unwrap(), 0.25);
        assert_eq!(u.marginal_utility(0.5).unwrap(), 0.0);
        assert!(u.utility(-3.0).is_ok());
    }

    #[test]
    fn exponential_at_zero() {
        let u = UtilitySpec::Exponential { alpha: 1.0 };
        assert_eq!(u.utility(0.0).unwrap(), -1.0);
        assert_eq!(u.marginal_utility(0.0).unwrap(), 1.0);
    }

    #[test]
    fn hara_rejects_nonpositive_wealth() {
        for u in [
            UtilitySpec::Log,
            UtilitySpec::Power { alpha: 0.5 },
            UtilitySpec::PowerNegative { alpha: -1.0, c: 0.0 },
        ] {
            assert!(matches!(u.utility(0.0), Err(UtilityError::Domain { .. })));
            assert!(u.marginal_utility(-1.0).is_err());
        }
    }

    #[test]
    fn shift_leaves_marginal_unchanged() {
        let a = UtilitySpec::PowerNegative { alpha: -2.0, c: 0.0 };
        let b = UtilitySpec::PowerNegative { alpha: -2.0, c: 5.0 };
        assert_eq!(a.marginal_utility(1.7), b.marginal_utility(1.7));
        assert_eq!(b.utility(1.0).unwrap(), 4.0);
    }

    #[test]
    fn log_weighted_marginal_is_exactly_one() {
        for x in [49.0, 0.1, 3.0, 1e-7, 12345.678] {
            assert_eq!(UtilitySpec::Log.marginal_times(x, x).unwrap(), 1.0);
        }
    }

    #[test]
    fn parameter_ranges() {
        assert!(UtilitySpec::Power { alpha: 1.0 }.validate().is_err());
        assert!(UtilitySpec::Power { alpha: 0.3 }.validate().is_ok());
        assert!(UtilitySpec::PowerNegative { alpha: 0.3, c: 0.0 }.validate().is_err());
        assert!(UtilitySpec::Exponential { alpha: 0.0 }.validate().is_err());
        assert!(UtilitySpec::Quadratic { alpha: 0.5 }.validate().is_ok());
    }
}
