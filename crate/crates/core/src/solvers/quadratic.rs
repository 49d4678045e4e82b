//! Quadratic utility `x - αx²/2`.
//!
//! The optimal control is a feedback of the density process `Z_t`, which
//! solves `dZ = Z₋(-θ dW¹ + b√(1-ρ²) Φ dW² + γΦ dM)` with `θ = (μ-r)/σ`.
//! With `P(t) = exp(∫₀ᵗ ξ)` and `ξ = -θ² - Φ·(p-a-λγ+ρbθ)`,
//!
//! ```text
//! L*(t)  = (1/α) e^{-∫_t^T r} (P_t/P_T) Φ(t) Z_{t-}
//! π̃*(t) = (1/α) e^{-∫_t^T r} (P_t/P_T) ((μ-r)/σ² + ρbΦ/σ) Z_{t-}
//! Z₀     = (1 - α x e^{∫_0^T r}) P_T
//! ```
//!
//! so that `Z_T = 1 - α X_T` on every path.

use alloc::vec::Vec;

use super::{evaluation_times, ConditionBreach, Diagnostics, OptimalControls, SolveError, SolveOptions, StrategySolution};
use crate::grid::GridFn;
use crate::model::{condition_margin_at, Model};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticIngredients {
    pub alpha: f64,
    pub x0: f64,
    pub horizon: f64,
    /// Riskless rate, for the discount `e^{-∫_t^T r}`.
    pub rate: GridFn,
    /// `Φ = (p-a-λγ+ρb(μ-r)/σ) / (b²(1-ρ²)+λγ²)`
    pub phi: GridFn,
    /// `φ = Φ · (p-a-λγ+ρb(μ-r)/σ)`, i.e. `Φ²(b²(1-ρ²)+λγ²)` unless clamped.
    pub varphi: GridFn,
    /// `ξ = -((μ-r)/σ)² - φ`
    pub xi: GridFn,
    /// `(μ-r)/σ² + ρbΦ/σ`
    pub pi_loading: GridFn,
    pub z0: f64,
    /// `P_T`
    pub p_horizon: f64,
}

impl QuadraticIngredients {
    pub fn p_at(&self, t: f64) -> f64 {
        libm::exp(self.xi.integral(0.0, t, self.horizon))
    }

    /// Feedback loading per unit of `Z_{t-}`:
    /// `(1/α) e^{-∫_t^T r} P_t / P_T`.
    pub fn loading(&self, t: f64) -> f64 {
        let discount = self.rate.integral(t, self.horizon, self.horizon);
        let tail_xi = self.xi.integral(t, self.horizon, self.horizon);
        libm::exp(-discount - tail_xi) / self.alpha
    }

    /// `(π̃*, L*)` given `Z_{t-} = z`.
    pub fn feedback(&self, t: f64, z: f64) -> (f64, f64) {
        let m = self.loading(t) * z;
        (m * self.pi_loading.at(t, self.horizon), m * self.phi.at(t, self.horizon))
    }
}

pub fn solve_quadratic(
    model: &Model,
    alpha: f64,
    x0: f64,
    n_points: usize,
    opts: &SolveOptions,
) -> Result<StrategySolution, SolveError> {
    let times = evaluation_times(model, n_points)?;
    if !(x0 > 0.0) {
        return Err(SolveError::InitialWealth(x0));
    }
    let risk = &model.risk;
    let market = &model.market;
    let n = market.n_grid();
    let den = risk.idiosyncratic_var() + risk.lambda * risk.gamma * risk.gamma;

    let margins: Vec<f64> = (0..n).map(|j| condition_margin_at(&market.point(j), risk)).collect();
    let breaches: Vec<ConditionBreach> = margins
        .iter()
        .enumerate()
        .filter(|(_, &m)| m / den < 0.0)
        .map(|(index, &m)| ConditionBreach { index, t: index as f64 * market.horizon / n as f64, margin: m / den })
        .collect();
    if !breaches.is_empty() && !opts.clamp_zero {
        return Err(SolveError::PhiNegative { breaches });
    }

    let phi = GridFn::from_fn(n, |j| (margins[j] / den).max(0.0));
    let varphi = GridFn::from_fn(n, |j| phi.cell(j) * margins[j]);
    let xi = GridFn::from_fn(n, |j| {
        let th = market.point(j).sharpe();
        -th * th - varphi.cell(j)
    });
    let pi_loading = GridFn::from_fn(n, |j| {
        let c = market.point(j);
        c.excess() / (c.sigma * c.sigma) + risk.rho * risk.b * phi.cell(j) / c.sigma
    });

    let bliss = alpha * x0 * market.growth_to_horizon(0.0);
    if !(bliss < 1.0) {
        return Err(SolveError::BlissPointExceeded { value: bliss });
    }
    let p_horizon = libm::exp(xi.integral(0.0, market.horizon, market.horizon));
    let ingredients = QuadraticIngredients {
        alpha,
        x0,
        horizon: market.horizon,
        rate: market.r.clone(),
        phi,
        varphi,
        xi,
        pi_loading,
        z0: (1.0 - bliss) * p_horizon,
        p_horizon,
    };

    let mut diag = Diagnostics::default();
    for (k, &t) in times.iter().enumerate() {
        let j = market.r.cell_index(t, market.horizon);
        let phi_t = ingredients.phi.cell(j);
        if margins[j] < 0.0 {
            diag.clamped.push(k);
        }
        // kernel-matching identity defining Φ
        diag.foc_residuals.push(if margins[j] < 0.0 { libm::fabs(margins[j]) } else { libm::fabs(margins[j] - phi_t * den) });
        diag.iterations.push(0);
        diag.root_values.push(phi_t);
        diag.condition_margins.push(margins[j]);
    }
    diag.finish();
    Ok(StrategySolution {
        utility: UtilitySpec::Quadratic { alpha },
        model: model.clone(),
        times,
        controls: OptimalControls::QuadraticFeedback(ingredients),
        diagnostics: diag,
    })
}
