use alloc::vec::Vec;

use super::{evaluation_times, require_condition, Diagnostics, OptimalControls, SolveError, SolveOptions, StrategySolution};
use crate::control::FractionalControl;
use crate::grid::GridFn;
use crate::model::{condition_margin_at, KappaDomainError, Model, PointCoefficients, RiskParams};
use crate::utility::UtilitySpec;

/// Coefficients of `A κ² - B(t) κ + C(t) = 0`, whose smaller root is the
/// log-optimal debt ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct LogQuadratic {
    pub a: f64,
    pub b: GridFn,
    pub c: GridFn,
    pub delta: GridFn,
}

impl LogQuadratic {
    pub fn new(model: &Model) -> Self {
        let risk = &model.risk;
        let n = model.market.n_grid();
        let a = risk.idiosyncratic_var() * risk.gamma;
        let b = GridFn::from_fn(n, |j| {
            risk.idiosyncratic_var() + risk.gamma * risk.hedged_margin(&model.market.point(j))
        });
        let c = GridFn::from_fn(n, |j| condition_margin_at(&model.market.point(j), risk));
        let delta = GridFn::from_fn(n, |j| b.cell(j) * b.cell(j) - 4.0 * a * c.cell(j));
        Self { a, b, c, delta }
    }

    /// `Δ` written as `(b²(1-ρ²) - γ(C+λγ))² + 4λb²(1-ρ²)γ²`, positive by
    /// inspection.
    pub fn delta_completed_square(model: &Model, j: usize) -> f64 {
        let risk = &model.risk;
        let d = risk.idiosyncratic_var();
        let c = condition_margin_at(&model.market.point(j), risk);
        let u = d - risk.gamma * (c + risk.jump_rate());
        u * u + 4.0 * risk.lambda * d * risk.gamma * risk.gamma
    }

    /// `(κ₋, κ₊)` on cell `j`.
    pub fn roots(&self, j: usize) -> (f64, f64) {
        let (b, c) = (self.b.cell(j), self.c.cell(j));
        let sq = libm::sqrt(self.delta.cell(j));
        if self.a == 0.0 {
            return (c / b, f64::INFINITY);
        }
        (2.0 * c / (b + sq), (b + sq) / (2.0 * self.a))
    }
}

/// Log-optimal `(π*, κ*)` at one time point.
pub fn log_point(c: &PointCoefficients, risk: &RiskParams) -> (f64, f64) {
    let d = risk.idiosyncratic_var();
    let a = d * risk.gamma;
    let c3 = risk.hedged_margin(c);
    let b = d + risk.gamma * c3;
    let cc = c3 - risk.jump_rate();
    let kappa = if a == 0.0 {
        // |ρ| = 1: the quadratic is linear
        cc / b
    } else {
        let delta = b * b - 4.0 * a * cc;
        // rationalized smaller root
        2.0 * cc / (b + libm::sqrt(delta))
    };
    let pi = (c.excess() + risk.rho * risk.b * c.sigma * kappa) / (c.sigma * c.sigma);
    (pi, kappa)
}

/// Residuals of the two first-order conditions of the log objective.
pub fn verify_foc_log(
    pi: f64,
    kappa: f64,
    c: &PointCoefficients,
    risk: &RiskParams,
) -> Result<(f64, f64), KappaDomainError> {
    let jf = 1.0 - risk.gamma * kappa;
    if !(jf > 0.0) {
        return Err(KappaDomainError { kappa });
    }
    let s = c.sigma;
    let first = c.excess() - s * s * pi + risk.rho * risk.b * s * kappa;
    let second = (risk.p - risk.a) + risk.rho * risk.b * s * pi - risk.b * risk.b * kappa - risk.jump_rate() / jf;
    Ok((first, second))
}

pub fn solve_log(model: &Model, n_points: usize, opts: &SolveOptions) -> Result<StrategySolution, SolveError> {
    let times = evaluation_times(model, n_points)?;
    require_condition(model, &model.technical_condition(), opts)?;
    let risk = &model.risk;

    let mut pi = Vec::with_capacity(n_points);
    let mut kappa = Vec::with_capacity(n_points);
    let mut diag = Diagnostics::default();
    for (k, &t) in times.iter().enumerate() {
        let c = model.market.at(t);
        let margin = condition_margin_at(&c, risk);
        let (p, kap) = if margin > 0.0 {
            log_point(&c, risk)
        } else {
            diag.clamped.push(k);
            (c.excess() / (c.sigma * c.sigma), 0.0)
        };
        let (r1, r2) = verify_foc_log(p, kap, &c, risk).unwrap_or((f64::NAN, f64::NAN));
        pi.push(p);
        kappa.push(kap);
        diag.foc_residuals.push(libm::fabs(r1).max(libm::fabs(r2)));
        diag.iterations.push(0);
        diag.root_values.push(kap);
        diag.condition_margins.push(margin);
    }
    diag.finish();
    Ok(StrategySolution {
        utility: UtilitySpec::Log,
        model: model.clone(),
        times,
        controls: OptimalControls::Fractional(FractionalControl { pi: GridFn::new(pi), kappa: GridFn::new(kappa) }),
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarketCoefficients;

    fn reference() -> Model {
        Model::new(
            MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
            RiskParams { p: 0.2, a: 0.1, b: 0.15, gamma: 0.3, lambda: 0.2, rho: -0.2 },
        )
    }

    #[test]
    fn reference_regression_value() {
        // 40-digit root of the first-order system, independent of the closed form
        let s = solve_log(&reference(), 1, &SolveOptions::default()).unwrap();
        let c = s.fractional().unwrap();
        assert!((c.pi.cell(0) - 1.395_206_341_284_660_2).abs() < 1e-13);
        assert!((c.kappa.cell(0) - 0.698_624_391_435_598_5).abs() < 1e-13);
        assert!(s.diagnostics.foc_residual_max < 1e-10);
        assert!(!s.diagnostics.non_optimal);
    }

    #[test]
    fn uncorrelated_gives_merton_ratio() {
        let mut m = reference();
        m.risk.rho = 0.0;
        let s = solve_log(&m, 1, &SolveOptions::default()).unwrap();
        assert_eq!(s.fractional().unwrap().pi.cell(0), 0.06 / (0.2 * 0.2));
    }

    #[test]
    fn boundary_condition_is_rejected_with_zero_limit() {
        let m = Model::new(
            MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
            RiskParams { p: 0.625, a: 0.5, b: 0.15, gamma: 0.25, lambda: 0.5, rho: 0.0 },
        );
        let err = solve_log(&m, 1, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::TechnicalConditionViolated { ref breaches } if breaches[0].margin == 0.0));
        // Aκ² - Bκ = 0: smaller root is zero
        let q = LogQuadratic::new(&m);
        assert_eq!(q.roots(0).0, 0.0);
        let clamped = solve_log(&m, 1, &SolveOptions { clamp_zero: true, ..Default::default() }).unwrap();
        assert_eq!(clamped.fractional().unwrap().kappa.cell(0), 0.0);
        assert!(clamped.diagnostics.non_optimal);
    }

    #[test]
    fn perfectly_correlated_reduces_to_linear_root() {
        let mut m = reference();
        m.risk.rho = -1.0;
        let (pi, kappa) = log_point(&m.market.point(0), &m.risk);
        let q = LogQuadratic::new(&m);
        assert_eq!(q.a, 0.0);
        assert!((kappa - q.c.cell(0) / q.b.cell(0)).abs() < 1e-15);
        let (r1, r2) = verify_foc_log(pi, kappa, &m.market.point(0), &m.risk).unwrap();
        assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
    }

    #[test]
    fn foc_residual_is_linear_in_pi() {
        let m = reference();
        let c = m.market.point(0);
        let (pi, kappa) = log_point(&c, &m.risk);
        let (r1, _) = verify_foc_log(pi + 0.1, kappa, &c, &m.risk).unwrap();
        assert!((r1 + 0.04 * 0.1).abs() < 1e-15);
        let (z1, z2) = verify_foc_log(0.0, 0.0, &c, &m.risk).unwrap();
        assert_eq!(z1, 0.06);
        assert!((z2 - (0.1 - 0.06)).abs() < 1e-16);
        assert!(verify_foc_log(0.0, 1.0 / 0.3, &c, &m.risk).is_err());
    }

    #[test]
    fn grid_refinement_is_invariant_for_constant_coefficients() {
        let m = reference();
        let coarse = solve_log(&m, 1, &SolveOptions::default()).unwrap();
        let fine = solve_log(&m, 100, &SolveOptions::default()).unwrap();
        let (a, b) = (coarse.fractional().unwrap(), fine.fractional().unwrap());
        for k in 0..100 {
            assert!((a.pi.cell(0) - b.pi.cell(k)).abs() <= 1e-14);
            assert!((a.kappa.cell(0) - b.kappa.cell(k)).abs() <= 1e-14);
        }
    }

    #[test]
    fn time_varying_coefficients_solve_per_cell() {
        let mut m = reference();
        m.market = MarketCoefficients {
            horizon: 2.0,
            r: GridFn::new(alloc::vec![0.01, 0.03]),
            mu: GridFn::new(alloc::vec![0.07, 0.09]),
            sigma: GridFn::new(alloc::vec![0.25, 0.18]),
        };
        let s = solve_log(&m, 4, &SolveOptions::default()).unwrap();
        let c = s.fractional().unwrap();
        assert_eq!(c.pi.cell(0), c.pi.cell(1));
        assert_ne!(c.pi.cell(1), c.pi.cell(2));
        assert_eq!(c.pi.cell(2), log_point(&m.market.point(1), &m.risk).0);
        assert!(s.diagnostics.foc_residual_max < 1e-10);
    }
}
