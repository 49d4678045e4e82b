use alloc::vec::Vec;

use super::roots::{bisect, Bisection, Root};
use super::{evaluation_times, require_condition, Diagnostics, OptimalControls, SolveError, SolveOptions, StrategySolution};
use crate::control::FractionalControl;
use crate::grid::GridFn;
use crate::model::{condition_margin_at, Model, PointCoefficients, RiskParams};
use crate::utility::UtilitySpec;

/// `h(φ) = φ^{α-1} + B₁ φ + C₁`, whose zero in `(0, 1)` is `φ = 1 - γκ*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRoot {
    pub alpha: f64,
    pub b1: f64,
    pub c1: f64,
}

impl PowerRoot {
    #[inline]
    pub fn eval(&self, phi: f64) -> f64 {
        libm::pow(phi, self.alpha - 1.0) + self.b1 * phi + self.c1
    }
}

pub fn power_root_function(alpha: f64, c: &PointCoefficients, risk: &RiskParams) -> PowerRoot {
    let d = risk.idiosyncratic_var();
    let lg = risk.jump_rate();
    let b1 = (alpha - 1.0) * d / (lg * risk.gamma);
    let c1 = -(risk.hedged_margin(c) + (alpha - 1.0) * d / risk.gamma) / lg;
    PowerRoot { alpha, b1, c1 }
}

/// Residual of `p-a+ρb(μ-r)/σ + (α-1)b²(1-ρ²)κ - λγ(1-γκ)^{α-1}`,
/// written in `φ = 1-γκ`.
pub fn power_foc_residual(alpha: f64, phi: f64, c: &PointCoefficients, risk: &RiskParams) -> f64 {
    risk.hedged_margin(c) + (alpha - 1.0) * risk.idiosyncratic_var() * (1.0 - phi) / risk.gamma
        - risk.jump_rate() * libm::pow(phi, alpha - 1.0)
}

const INITIAL_EPS: f64 = 1e-6;

/// Root of `h` in `(0, 1)`; the bracket `(ε, 1-ε)` is widened toward either
/// boundary until the sign change is enclosed.
fn find_phi(h: &PowerRoot, opts: &SolveOptions) -> Option<Root> {
    let f = |x: f64| h.eval(x);
    let mut lo = INITIAL_EPS;
    while !(f(lo) > 0.0) {
        lo *= 1.0 / 16.0;
        if lo < f64::MIN_POSITIVE {
            return None;
        }
    }
    let mut gap = INITIAL_EPS;
    let mut hi = 1.0 - gap;
    while !(f(hi) < 0.0) {
        if hi >= 1.0 {
            return None;
        }
        gap *= 1.0 / 16.0;
        hi = if gap < f64::EPSILON { 1.0 } else { 1.0 - gap };
    }
    if lo >= hi {
        return None;
    }
    // relative precision in φ keeps φ^{α-1} accurate when the root is tiny
    let rule = Bisection { tolerance: opts.bisection.tolerance * lo.min(1.0), ..opts.bisection };
    bisect(f, lo, hi, rule).ok()
}

/// Power utility `x^α`, `0 < α < 1`, or `c - x^α`, `α < 0`.
pub fn solve_power(model: &Model, alpha: f64, n_points: usize, opts: &SolveOptions) -> Result<StrategySolution, SolveError> {
    let times = evaluation_times(model, n_points)?;
    require_condition(model, &model.technical_condition(), opts)?;
    let risk = &model.risk;

    let mut pi = Vec::with_capacity(n_points);
    let mut kappa = Vec::with_capacity(n_points);
    let mut diag = Diagnostics::default();
    for (k, &t) in times.iter().enumerate() {
        let c = model.market.at(t);
        let margin = condition_margin_at(&c, risk);
        let (phi, iterations) = if margin > 0.0 {
            let h = power_root_function(alpha, &c, risk);
            let root = find_phi(&h, opts).ok_or(SolveError::BracketFailure { t })?;
            (root.x, root.iterations)
        } else {
            // boundary limit h(1) >= 0: φ = 1, κ* = 0
            diag.clamped.push(k);
            (1.0, 0)
        };
        let kap = (1.0 - phi) / risk.gamma;
        let p = c.excess() / ((1.0 - alpha) * c.sigma * c.sigma) + risk.rho * risk.b * kap / c.sigma;
        pi.push(p);
        kappa.push(kap);
        diag.foc_residuals.push(libm::fabs(power_foc_residual(alpha, phi, &c, risk)));
        diag.iterations.push(iterations);
        diag.root_values.push(phi);
        diag.condition_margins.push(margin);
    }
    diag.finish();
    let utility = if alpha < 0.0 {
        UtilitySpec::PowerNegative { alpha, c: 0.0 }
    } else {
        UtilitySpec::Power { alpha }
    };
    Ok(StrategySolution {
        utility,
        model: model.clone(),
        times,
        controls: OptimalControls::Fractional(FractionalControl { pi: GridFn::new(pi), kappa: GridFn::new(kappa) }),
        diagnostics: diag,
    })
}
