//! Optimal strategies for the four utility families.
//!
//! Log and power utilities are solved over fractional controls `(π, κ)`,
//! exponential and quadratic over dollar controls `(π̃, L)`. Each solver
//! evaluates its control at the left endpoints `t_k = kT/n` of a uniform
//! partition that refines the coefficient grid, and reports the residual of
//! the first-order condition it solved.

mod exponential;
mod kernels;
mod log;
mod power;
mod quadratic;
pub mod roots;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

pub use exponential::{exponential_root_function, solve_exponential, ExponentialRoot};
pub use kernels::{compute_kernels, kernel_residuals, kernels_unchecked, MeasureChangeKernel};
pub use log::{log_point, solve_log, verify_foc_log, LogQuadratic};
pub use power::{power_root_function, solve_power, PowerRoot};
pub use quadratic::{solve_quadratic, QuadraticIngredients};

use crate::control::{DollarControl, FractionalControl};
use crate::grid::left_endpoints;
use crate::model::{validate_params, ConditionMargin, Model, ValidationReport};
use crate::utility::{UtilityError, UtilitySpec};
use roots::Bisection;

/// Residual threshold for first-order and kernel equations.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub struct SolveOptions {
    /// Replace the optimal debt ratio / liabilities by zero where the
    /// technical condition fails, instead of returning an error.
    pub clamp_zero: bool,
    pub bisection: Bisection,
}


/// A grid cell where a solver precondition fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionBreach {
    pub index: usize,
    pub t: f64,
    pub margin: f64,
}

fn describe(breaches: &[ConditionBreach]) -> String {
    let worst = breaches.iter().copied().fold(None, |acc: Option<ConditionBreach>, b| match acc {
        Some(w) if w.margin <= b.margin => Some(w),
        _ => Some(b),
    });
    let mut s = String::new();
    if let Some(w) = worst {
        let _ = write!(s, "{} grid point(s); min C(t)={} at t={}", breaches.len(), w.margin, w.t);
    }
    s
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("invalid parameters: {0}")]
    InvalidParams(ValidationReport),
    #[error(transparent)]
    InvalidUtility(#[from] UtilityError),
    #[error("technical condition p-a+rho*b*(mu-r)/sigma > lambda*gamma violated at {}", describe(.breaches))]
    TechnicalConditionViolated { breaches: Vec<ConditionBreach> },
    #[error("Phi(t) negative at {}", describe(.breaches))]
    PhiNegative { breaches: Vec<ConditionBreach> },
    #[error("alpha*x0*e^(rT) = {value} is not below the bliss level 1")]
    BlissPointExceeded { value: f64 },
    #[error("root bracket not found at t={t}")]
    BracketFailure { t: f64 },
    #[error("kernel residual {residual} at t={t} exceeds tolerance")]
    KernelResidualTooLarge { t: f64, residual: f64 },
    #[error("{n_points} evaluation points do not refine the {n_grid}-cell coefficient grid")]
    GridMismatch { n_points: usize, n_grid: usize },
    #[error("initial wealth must be positive, got {0}")]
    InitialWealth(f64),
}

impl SolveError {
    /// Whether the failure is a violated mathematical precondition (as
    /// opposed to bad input).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            SolveError::TechnicalConditionViolated { .. }
                | SolveError::PhiNegative { .. }
                | SolveError::BlissPointExceeded { .. }
                | SolveError::BracketFailure { .. }
        )
    }
}

/// The optimal control in the form the utility calls for.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimalControls {
    Fractional(FractionalControl),
    Dollar(DollarControl),
    /// Quadratic utility: the control is a feedback of the density process.
    QuadraticFeedback(QuadraticIngredients),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Absolute first-order residual per evaluation point.
    pub foc_residuals: Vec<f64>,
    pub foc_residual_max: f64,
    /// Bisection iterations per point (0 for closed forms).
    pub iterations: Vec<u32>,
    /// The solved scalar per point: κ (log), φ = 1-γκ (power), L (exponential), Φ (quadratic).
    pub root_values: Vec<f64>,
    /// `C(t)` per evaluation point.
    pub condition_margins: Vec<f64>,
    /// Points where `clamp_zero` replaced the optimum.
    pub clamped: Vec<usize>,
    pub non_optimal: bool,
}

impl Diagnostics {
    fn finish(&mut self) {
        self.foc_residual_max = self.foc_residuals.iter().copied().fold(0.0, f64::max);
        self.non_optimal = !self.clamped.is_empty();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySolution {
    pub utility: UtilitySpec,
    pub model: Model,
    pub times: Vec<f64>,
    pub controls: OptimalControls,
    pub diagnostics: Diagnostics,
}

impl StrategySolution {
    pub fn n_points(&self) -> usize {
        self.times.len()
    }

    pub fn fractional(&self) -> Option<&FractionalControl> {
        match &self.controls {
            OptimalControls::Fractional(c) => Some(c),
            _ => None,
        }
    }

    pub fn dollar(&self) -> Option<&DollarControl> {
        match &self.controls {
            OptimalControls::Dollar(c) => Some(c),
            _ => None,
        }
    }

    pub fn quadratic(&self) -> Option<&QuadraticIngredients> {
        match &self.controls {
            OptimalControls::QuadraticFeedback(q) => Some(q),
            _ => None,
        }
    }
}

fn evaluation_times(model: &Model, n_points: usize) -> Result<Vec<f64>, SolveError> {
    let n_grid = model.market.n_grid();
    if n_points == 0 || !n_points.is_multiple_of(n_grid) {
        return Err(SolveError::GridMismatch { n_points, n_grid });
    }
    Ok(left_endpoints(n_points, model.horizon()))
}

/// Fails with the breached cells when `C(t) ≤ 0` somewhere on the
/// coefficient grid and clamping is off.
fn require_condition(model: &Model, margin: &ConditionMargin, opts: &SolveOptions) -> Result<(), SolveError> {
    if margin.holds() || opts.clamp_zero {
        return Ok(());
    }
    let n = model.market.n_grid();
    let breaches = margin
        .breaches()
        .into_iter()
        .map(|index| ConditionBreach {
            index,
            t: index as f64 * model.horizon() / n as f64,
            margin: margin.values.cell(index),
        })
        .collect();
    Err(SolveError::TechnicalConditionViolated { breaches })
}

/// Validates the inputs and dispatches to the solver for `utility`.
/// `x0` is only used by the quadratic solver.
pub fn solve(
    model: &Model,
    utility: UtilitySpec,
    x0: f64,
    n_points: usize,
    opts: &SolveOptions,
) -> Result<StrategySolution, SolveError> {
    let report = validate_params(&model.market, &model.risk);
    if !report.is_valid() {
        return Err(SolveError::InvalidParams(report));
    }
    utility.validate()?;
    match utility {
        UtilitySpec::Log => solve_log(model, n_points, opts),
        UtilitySpec::Power { alpha } | UtilitySpec::PowerNegative { alpha, .. } => {
            let mut s = solve_power(model, alpha, n_points, opts)?;
            s.utility = utility;
            Ok(s)
        }
        UtilitySpec::Exponential { alpha } => solve_exponential(model, alpha, n_points, opts),
        UtilitySpec::Quadratic { alpha } => solve_quadratic(model, alpha, x0, n_points, opts),
    }
}
