use alloc::vec::Vec;

use super::roots::bisect;
use super::{evaluation_times, require_condition, Diagnostics, OptimalControls, SolveError, SolveOptions, StrategySolution};
use crate::control::DollarControl;
use crate::grid::GridFn;
use crate::model::{condition_margin_at, Model, PointCoefficients, RiskParams};
use crate::utility::UtilitySpec;

/// `h̃(L) = λγ e^{A₃ L} + B₃ L - C₃`, strictly increasing in `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialRoot {
    pub jump_rate: f64,
    pub a3: f64,
    pub b3: f64,
    pub c3: f64,
}

impl ExponentialRoot {
    #[inline]
    pub fn eval(&self, l: f64) -> f64 {
        self.jump_rate * libm::exp(self.a3 * l) + self.b3 * l - self.c3
    }
}

/// `growth` is `e^{∫_t^T r}`.
pub fn exponential_root_function(alpha: f64, growth: f64, c: &PointCoefficients, risk: &RiskParams) -> ExponentialRoot {
    ExponentialRoot {
        jump_rate: risk.jump_rate(),
        a3: alpha * risk.gamma * growth,
        b3: alpha * growth * risk.idiosyncratic_var(),
        c3: risk.hedged_margin(c),
    }
}

const MAX_DOUBLINGS: u32 = 1100;

/// Exponential utility `-e^{-αx}/α`. The optimal liabilities do not depend
/// on wealth.
pub fn solve_exponential(model: &Model, alpha: f64, n_points: usize, opts: &SolveOptions) -> Result<StrategySolution, SolveError> {
    let times = evaluation_times(model, n_points)?;
    require_condition(model, &model.technical_condition(), opts)?;
    let risk = &model.risk;

    let mut pi_tilde = Vec::with_capacity(n_points);
    let mut liabilities = Vec::with_capacity(n_points);
    let mut diag = Diagnostics::default();
    for (k, &t) in times.iter().enumerate() {
        let c = model.market.at(t);
        let growth = model.market.growth_to_horizon(t);
        let h = exponential_root_function(alpha, growth, &c, risk);
        let margin = condition_margin_at(&c, risk);
        let (l, iterations) = if h.eval(0.0) < 0.0 {
            let mut hi = 1.0;
            let mut doublings = 0;
            while !(h.eval(hi) > 0.0) {
                hi *= 2.0;
                doublings += 1;
                if doublings > MAX_DOUBLINGS {
                    return Err(SolveError::BracketFailure { t });
                }
            }
            let root = bisect(|x| h.eval(x), 0.0, hi, opts.bisection).map_err(|_| SolveError::BracketFailure { t })?;
            (root.x, root.iterations)
        } else {
            diag.clamped.push(k);
            (0.0, 0)
        };
        pi_tilde.push(c.excess() / (alpha * c.sigma * c.sigma) / growth + risk.rho * risk.b * l / c.sigma);
        liabilities.push(l);
        diag.foc_residuals.push(libm::fabs(h.eval(l)));
        diag.iterations.push(iterations);
        diag.root_values.push(l);
        diag.condition_margins.push(margin);
    }
    diag.finish();
    Ok(StrategySolution {
        utility: UtilitySpec::Exponential { alpha },
        model: model.clone(),
        times,
        controls: OptimalControls::Dollar(DollarControl {
            pi_tilde: GridFn::new(pi_tilde),
            liabilities: GridFn::new(liabilities),
        }),
        diagnostics: diag,
    })
}
