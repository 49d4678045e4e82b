//! Measure-change kernels `(θ₁, θ₂, θ₃)` of the density process
//! `dZ = Z₋(θ₁ dW¹ + θ₂ dW² + θ₃ dM)`.
//!
//! Whatever the utility, the kernels must satisfy
//!
//! ```text
//! μ - r + σ θ₁ = 0
//! p - a - ρ b θ₁ - b√(1-ρ²) θ₂ - λγ (1 + θ₃) = 0
//! ```

use alloc::vec::Vec;

use super::{OptimalControls, SolveError, StrategySolution, RESIDUAL_TOLERANCE};
use crate::model::{PointCoefficients, RiskParams};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureChangeKernel {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub theta3: Vec<f64>,
    /// Quadratic utility: the kernels are multiples of `Z_{t-}` and stored per unit `Z`.
    pub per_unit_z: bool,
    /// Residuals of the market-price equation, per point.
    pub market_residuals: Vec<f64>,
    /// Residuals of the liability equation, per point.
    pub liability_residuals: Vec<f64>,
}

impl MeasureChangeKernel {
    pub fn max_residual(&self) -> f64 {
        self.market_residuals
            .iter()
            .chain(&self.liability_residuals)
            .map(|r| libm::fabs(*r))
            .fold(0.0, f64::max)
    }
}

/// Residuals of the two universal kernel equations.
pub fn kernel_residuals(theta: (f64, f64, f64), c: &PointCoefficients, risk: &RiskParams) -> (f64, f64) {
    let (t1, t2, t3) = theta;
    let market = c.excess() + c.sigma * t1;
    let liability = risk.p - risk.a - risk.rho * risk.b * t1 - risk.orthogonal_vol() * t2 - risk.jump_rate() * (1.0 + t3);
    (market, liability)
}

/// Kernels of `solution` and their residuals, without the tolerance check.
pub fn kernels_unchecked(solution: &StrategySolution) -> MeasureChangeKernel {
    let model = &solution.model;
    let risk = &model.risk;
    let sv = risk.orthogonal_vol();
    let mut k = MeasureChangeKernel {
        theta1: Vec::new(),
        theta2: Vec::new(),
        theta3: Vec::new(),
        per_unit_z: false,
        market_residuals: Vec::new(),
        liability_residuals: Vec::new(),
    };
    for (i, &t) in solution.times.iter().enumerate() {
        let c = model.market.at(t);
        let theta = match (&solution.controls, solution.utility) {
            (OptimalControls::Fractional(u), UtilitySpec::Log) => {
                let (pi, kappa) = (u.pi.cell(i), u.kappa.cell(i));
                (
                    -(c.sigma * pi - risk.rho * risk.b * kappa),
                    sv * kappa,
                    1.0 / (1.0 - risk.gamma * kappa) - 1.0,
                )
            }
            (OptimalControls::Fractional(u), utility) => {
                let alpha = utility.alpha().unwrap_or(0.0);
                let (pi, kappa) = (u.pi.cell(i), u.kappa.cell(i));
                // the solved φ = 1-γκ is more accurate than its reconstruction from κ
                let phi = solution.diagnostics.root_values.get(i).copied().unwrap_or(1.0 - risk.gamma * kappa);
                (
                    (alpha - 1.0) * (c.sigma * pi - risk.rho * risk.b * kappa),
                    -(alpha - 1.0) * sv * kappa,
                    libm::pow(phi, alpha - 1.0) - 1.0,
                )
            }
            (OptimalControls::Dollar(u), utility) => {
                let alpha = utility.alpha().unwrap_or(0.0);
                let scale = alpha * model.market.growth_to_horizon(t);
                let (pt, l) = (u.pi_tilde.cell(i), u.liabilities.cell(i));
                (
                    -scale * (c.sigma * pt - risk.rho * risk.b * l),
                    scale * sv * l,
                    libm::exp(scale * risk.gamma * l) - 1.0,
                )
            }
            (OptimalControls::QuadraticFeedback(q), _) => {
                k.per_unit_z = true;
                let phi = q.phi.at(t, q.horizon);
                (-c.sharpe(), sv * phi, risk.gamma * phi)
            }
        };
        let (m, l) = kernel_residuals(theta, &c, risk);
        k.theta1.push(theta.0);
        k.theta2.push(theta.1);
        k.theta3.push(theta.2);
        k.market_residuals.push(m);
        k.liability_residuals.push(l);
    }
    k
}

/// Kernels of an optimal solution; fails if either universal equation is
/// off by more than `1e-10` anywhere.
pub fn compute_kernels(solution: &StrategySolution) -> Result<MeasureChangeKernel, SolveError> {
    let k = kernels_unchecked(solution);
    for (i, &t) in solution.times.iter().enumerate() {
        let worst = libm::fabs(k.market_residuals[i]).max(libm::fabs(k.liability_residuals[i]));
        if !(worst < RESIDUAL_TOLERANCE) {
            return Err(SolveError::KernelResidualTooLarge { t, residual: worst });
        }
        if !(1.0 + k.theta3[i] > 0.0) {
            return Err(SolveError::KernelResidualTooLarge { t, residual: f64::NAN });
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::super::{solve, SolveOptions};
    use super::*;
    use crate::model::{MarketCoefficients, Model};

    fn reference() -> Model {
        Model::new(
            MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
            RiskParams { p: 0.2, a: 0.1, b: 0.15, gamma: 0.3, lambda: 0.2, rho: -0.2 },
        )
    }

    #[test]
    fn every_utility_satisfies_kernel_equations() {
        let m = reference();
        for u in [
            UtilitySpec::Log,
            UtilitySpec::Power { alpha: 0.5 },
            UtilitySpec::PowerNegative { alpha: -1.5, c: 0.0 },
            UtilitySpec::Exponential { alpha: 1.0 },
            UtilitySpec::Quadratic { alpha: 0.5 },
        ] {
            let s = solve(&m, u, 1.0, 4, &SolveOptions::default()).unwrap();
            let k = compute_kernels(&s).unwrap();
            assert!(k.max_residual() < 1e-10, "{u}: {}", k.max_residual());
            for th in &k.theta1 {
                assert!((th + 0.3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uncorrelated_log_without_policies() {
        let m = reference();
        let c = m.market.point(0);
        // κ* = 0: θ₁ = -(μ-r)/σ, θ₂ = θ₃ = 0
        let risk = RiskParams { rho: 0.0, ..m.risk };
        let pi = c.excess() / (c.sigma * c.sigma);
        let theta = (-(c.sigma * pi), 0.0, 0.0);
        assert!((theta.0 + 0.3).abs() < 1e-15);
        let (m1, _) = kernel_residuals(theta, &c, &risk);
        assert!(m1.abs() < 1e-15);
    }

    #[test]
    fn exponential_kernels_at_reference_root() {
        // kernels evaluated with 40-digit arithmetic at the frozen L*
        let s = solve(&reference(), UtilitySpec::Exponential { alpha: 1.0 }, 1.0, 1, &SolveOptions::default()).unwrap();
        let k = compute_kernels(&s).unwrap();
        assert!((k.theta1[0] + 0.3).abs() < 1e-12);
        assert!((k.theta2[0] - 0.109_096_469_640_918_09).abs() < 1e-11);
        assert!((k.theta3[0] - 0.249_435_983_307_381_42).abs() < 1e-11);
    }

    #[test]
    fn clamped_solution_fails_kernel_check() {
        let m = Model::new(
            MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
            RiskParams { p: 0.2, a: 0.1, b: 0.15, gamma: 0.3, lambda: 0.6, rho: -0.2 },
        );
        let s = solve(&m, UtilitySpec::Log, 1.0, 1, &SolveOptions { clamp_zero: true, ..Default::default() }).unwrap();
        assert!(s.diagnostics.non_optimal);
        assert!(matches!(compute_kernels(&s), Err(SolveError::KernelResidualTooLarge { .. })));
    }
}
