//! Deterministic, piecewise-constant controls.

use crate::grid::GridFn;
use crate::model::RiskParams;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum AdmissibilityError {
    #[error("debt ratio {kappa} at cell {index} outside [0, 1/gamma)")]
    DebtRatio { index: usize, kappa: f64 },
    #[error("liability level {level} at cell {index} is negative")]
    NegativeLiabilities { index: usize, level: f64 },
    #[error("control value at cell {index} is not finite")]
    NonFinite { index: usize },
}

/// Proportion of wealth in the risky asset and debt ratio `κ = L/X`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalControl {
    pub pi: GridFn,
    pub kappa: GridFn,
}

impl FractionalControl {
    pub fn constant(pi: f64, kappa: f64) -> Self {
        Self { pi: GridFn::constant(pi), kappa: GridFn::constant(kappa) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0, 0.0)
    }

    /// `(s_π π, s_κ κ)`.
    pub fn scaled(&self, pi_scale: f64, kappa_scale: f64) -> Self {
        Self { pi: self.pi.map(|v| v * pi_scale), kappa: self.kappa.map(|v| v * kappa_scale) }
    }

    pub fn check(&self, risk: &RiskParams) -> Result<(), AdmissibilityError> {
        for (index, &pi) in self.pi.values().iter().enumerate() {
            if !pi.is_finite() {
                return Err(AdmissibilityError::NonFinite { index });
            }
        }
        for (index, &kappa) in self.kappa.values().iter().enumerate() {
            if !kappa.is_finite() {
                return Err(AdmissibilityError::NonFinite { index });
            }
            if !(kappa >= 0.0 && risk.gamma * kappa < 1.0) {
                return Err(AdmissibilityError::DebtRatio { index, kappa });
            }
        }
        Ok(())
    }
}

/// Dollar amount in the risky asset and number of outstanding policies.
#[derive(Debug, Clone, PartialEq)]
pub struct DollarControl {
    pub pi_tilde: GridFn,
    pub liabilities: GridFn,
}

impl DollarControl {
    pub fn constant(pi_tilde: f64, liabilities: f64) -> Self {
        Self { pi_tilde: GridFn::constant(pi_tilde), liabilities: GridFn::constant(liabilities) }
    }

    pub fn zero() -> Self {
        Self::constant(0.0, 0.0)
    }

    pub fn scaled(&self, pi_scale: f64, l_scale: f64) -> Self {
        Self {
            pi_tilde: self.pi_tilde.map(|v| v * pi_scale),
            liabilities: self.liabilities.map(|v| v * l_scale),
        }
    }

    pub fn check(&self) -> Result<(), AdmissibilityError> {
        for (index, &v) in self.pi_tilde.values().iter().enumerate() {
            if !v.is_finite() {
                return Err(AdmissibilityError::NonFinite { index });
            }
        }
        for (index, &level) in self.liabilities.values().iter().enumerate() {
            if !level.is_finite() {
                return Err(AdmissibilityError::NonFinite { index });
            }
            if level < 0.0 {
                return Err(AdmissibilityError::NegativeLiabilities { index, level });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn risk() -> RiskParams {
        RiskParams { p: 0.2, a: 0.1, b: 0.15, gamma: 0.3, lambda: 0.2, rho: -0.2 }
    }

    #[test]
    fn debt_ratio_bounds() {
        assert!(FractionalControl::constant(1.0, 0.0).check(&risk()).is_ok());
        assert!(FractionalControl::constant(1.0, 3.3).check(&risk()).is_ok());
        assert!(FractionalControl::constant(1.0, 1.0 / 0.3).check(&risk()).is_err());
        assert!(FractionalControl::constant(1.0, -0.1).check(&risk()).is_err());
        assert!(FractionalControl::constant(f64::NAN, 0.1).check(&risk()).is_err());
    }

    #[test]
    fn liabilities_nonnegative() {
        assert!(DollarControl::constant(-5.0, 0.0).check().is_ok());
        assert!(DollarControl::constant(1.0, -1e-9).check().is_err());
    }
}
