//! Market and insurance-risk parameters, admissibility checks, and the
//! pointwise objective of the logarithmic problem.

use alloc::vec::Vec;
use core::fmt;

use crate::grid::GridFn;

/// Riskless rate, risky drift and volatility, each piecewise constant on
/// the same uniform grid over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketCoefficients {
    pub horizon: f64,
    pub r: GridFn,
    pub mu: GridFn,
    pub sigma: GridFn,
}

impl MarketCoefficients {
    pub fn constant(r: f64, mu: f64, sigma: f64, horizon: f64) -> Self {
        Self {
            horizon,
            r: GridFn::constant(r),
            mu: GridFn::constant(mu),
            sigma: GridFn::constant(sigma),
        }
    }

    pub fn n_grid(&self) -> usize {
        self.r.len()
    }

    /// Coefficients on grid cell `j`.
    pub fn point(&self, j: usize) -> PointCoefficients {
        PointCoefficients {
            r: self.r.cell(j),
            mu: self.mu.cell(j),
            sigma: self.sigma.cell(j),
        }
    }

    pub fn at(&self, t: f64) -> PointCoefficients {
        self.point(self.r.cell_index(t, self.horizon))
    }

    /// Coefficients on step `k` of a partition refining the grid.
    #[inline]
    pub fn on_step(&self, k: usize, n_steps: usize) -> PointCoefficients {
        PointCoefficients {
            r: self.r.on_step(k, n_steps),
            mu: self.mu.on_step(k, n_steps),
            sigma: self.sigma.on_step(k, n_steps),
        }
    }

    /// `∫_a^b r(s) ds`, exact on the grid.
    pub fn integrated_rate(&self, a: f64, b: f64) -> f64 {
        self.r.integral(a, b, self.horizon)
    }

    /// `exp(∫_t^T r(s) ds)`, the growth of the riskless account from `t` to `T`.
    pub fn growth_to_horizon(&self, t: f64) -> f64 {
        libm::exp(self.integrated_rate(t, self.horizon))
    }
}

/// Market coefficients frozen at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCoefficients {
    pub r: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl PointCoefficients {
    /// Market price of risk `(μ - r) / σ`.
    #[inline]
    pub fn sharpe(&self) -> f64 {
        (self.mu - self.r) / self.sigma
    }

    #[inline]
    pub fn excess(&self) -> f64 {
        self.mu - self.r
    }
}

/// Per-policy premium and claim parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskParams {
    /// Premium rate per policy.
    pub p: f64,
    /// Claim drift per policy.
    pub a: f64,
    /// Claim diffusion volatility per policy.
    pub b: f64,
    /// Claim jump size per policy.
    pub gamma: f64,
    /// Jump intensity.
    pub lambda: f64,
    /// Correlation of the claim diffusion with the market Brownian motion.
    pub rho: f64,
}

impl RiskParams {
    /// `b²(1 - ρ²)`, the variance of the claim noise orthogonal to the market.
    #[inline]
    pub fn idiosyncratic_var(&self) -> f64 {
        self.b * self.b * (1.0 - self.rho * self.rho)
    }

    #[inline]
    pub fn orthogonal_vol(&self) -> f64 {
        self.b * libm::sqrt(1.0 - self.rho * self.rho)
    }

    /// Expected jump loss rate per policy, `λγ`.
    #[inline]
    pub fn jump_rate(&self) -> f64 {
        self.lambda * self.gamma
    }

    /// Largest admissible debt ratio (exclusive), `1/γ`.
    #[inline]
    pub fn kappa_limit(&self) -> f64 {
        1.0 / self.gamma
    }

    /// Premium margin net of claim drift and market hedge,
    /// `p - a + ρ b (μ - r)/σ`.
    #[inline]
    pub fn hedged_margin(&self, c: &PointCoefficients) -> f64 {
        self.p - self.a + self.rho * self.b * c.sharpe()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub market: MarketCoefficients,
    pub risk: RiskParams,
}

impl Model {
    pub fn new(market: MarketCoefficients, risk: RiskParams) -> Self {
        Self { market, risk }
    }

    /// Builds the model, rejecting it if any invariant is violated.
    pub fn validated(market: MarketCoefficients, risk: RiskParams) -> Result<Self, ValidationReport> {
        let report = validate_params(&market, &risk);
        if report.is_valid() {
            Ok(Self { market, risk })
        } else {
            Err(report)
        }
    }

    pub fn horizon(&self) -> f64 {
        self.market.horizon
    }

    pub fn technical_condition(&self) -> ConditionMargin {
        technical_condition_margin(&self.market, &self.risk)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    HorizonNotPositive,
    GridMismatch,
    NonFinite(&'static str),
    SigmaNotPositive { index: usize },
    RateNegative { index: usize },
    MuNotAboveRate { index: usize },
    PremiumNotAboveClaimDrift,
    ClaimDriftNotPositive,
    ClaimVolNotPositive,
    JumpSizeNotPositive,
    IntensityNotPositive,
    CorrelationOutOfRange,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::HorizonNotPositive => write!(f, "T>0 fails"),
            Violation::GridMismatch => write!(f, "r, mu and sigma grids differ in length"),
            Violation::NonFinite(name) => write!(f, "{name} is not finite"),
            Violation::SigmaNotPositive { index } => write!(f, "sigma>0 fails at grid point {index}"),
            Violation::RateNegative { index } => write!(f, "r>=0 fails at grid point {index}"),
            Violation::MuNotAboveRate { index } => write!(f, "mu>r fails at grid point {index}"),
            Violation::PremiumNotAboveClaimDrift => write!(f, "p>a fails"),
            Violation::ClaimDriftNotPositive => write!(f, "a>0 fails"),
            Violation::ClaimVolNotPositive => write!(f, "b>0 fails"),
            Violation::JumpSizeNotPositive => write!(f, "gamma>0 fails"),
            Violation::IntensityNotPositive => write!(f, "lambda>0 fails"),
            Violation::CorrelationOutOfRange => write!(f, "rho in (-1,1) fails"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The liabilities are not negatively correlated with the market.
    NonNegativeCorrelation,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NonNegativeCorrelation => write!(f, "rho >= 0: liabilities not negatively correlated with the market"),
        }
    }
}

/// Every violated invariant, plus non-fatal warnings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_params(market: &MarketCoefficients, risk: &RiskParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;

    if !market.horizon.is_finite() {
        v.push(Violation::NonFinite("T"));
    } else if market.horizon <= 0.0 {
        v.push(Violation::HorizonNotPositive);
    }
    let n = market.r.len();
    if market.mu.len() != n || market.sigma.len() != n {
        v.push(Violation::GridMismatch);
    } else {
        for (name, g) in [("r", &market.r), ("mu", &market.mu), ("sigma", &market.sigma)] {
            if g.values().iter().any(|x| !x.is_finite()) {
                v.push(Violation::NonFinite(name));
            }
        }
        for j in 0..n {
            let c = market.point(j);
            if !(c.sigma > 0.0) {
                v.push(Violation::SigmaNotPositive { index: j });
            }
            if !(c.r >= 0.0) {
                v.push(Violation::RateNegative { index: j });
            }
            if !(c.mu > c.r) {
                v.push(Violation::MuNotAboveRate { index: j });
            }
        }
    }

    let scalars = [
        ("p", risk.p),
        ("a", risk.a),
        ("b", risk.b),
        ("gamma", risk.gamma),
        ("lambda", risk.lambda),
        ("rho", risk.rho),
    ];
    for (name, x) in scalars {
        if !x.is_finite() {
            v.push(Violation::NonFinite(name));
        }
    }
    if !(risk.p > risk.a) {
        v.push(Violation::PremiumNotAboveClaimDrift);
    }
    if !(risk.a > 0.0) {
        v.push(Violation::ClaimDriftNotPositive);
    }
    if !(risk.b > 0.0) {
        v.push(Violation::ClaimVolNotPositive);
    }
    if !(risk.gamma > 0.0) {
        v.push(Violation::JumpSizeNotPositive);
    }
    if !(risk.lambda > 0.0) {
        v.push(Violation::IntensityNotPositive);
    }
    if !(risk.rho > -1.0 && risk.rho < 1.0) {
        v.push(Violation::CorrelationOutOfRange);
    }
    if risk.rho >= 0.0 {
        report.warnings.push(Warning::NonNegativeCorrelation);
    }
    report
}

/// `C(t) = p - a + ρ b (μ - r)/σ - λγ` per coefficient grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMargin {
    pub values: GridFn,
    pub min: f64,
    pub argmin: usize,
}

impl ConditionMargin {
    pub fn holds(&self) -> bool {
        self.min > 0.0
    }

    /// Cells where the margin is not strictly positive.
    pub fn breaches(&self) -> Vec<usize> {
        self.values
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &c)| !(c > 0.0))
            .map(|(j, _)| j)
            .collect()
    }
}

#[inline]
pub fn condition_margin_at(c: &PointCoefficients, risk: &RiskParams) -> f64 {
    risk.hedged_margin(c) - risk.jump_rate()
}

pub fn technical_condition_margin(market: &MarketCoefficients, risk: &RiskParams) -> ConditionMargin {
    let values = GridFn::from_fn(market.n_grid(), |j| condition_margin_at(&market.point(j), risk));
    let (argmin, min) = values
        .values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
    ConditionMargin { values, min, argmin }
}

/// Raised when `1 - γκ ≤ 0`, where the logarithm of the jump factor is undefined.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("debt ratio {kappa} outside [0, 1/gamma)")]
pub struct KappaDomainError {
    pub kappa: f64,
}

/// Drift of `ln X` under the fractional control `(π, κ)`:
/// `r + (μ-r)π + (p-a)κ - ½σ²π² + ρbσπκ - ½b²κ² + λ ln(1-γκ)`.
pub fn log_objective_f(
    pi: f64,
    kappa: f64,
    c: &PointCoefficients,
    risk: &RiskParams,
) -> Result<f64, KappaDomainError> {
    let jump_factor = 1.0 - risk.gamma * kappa;
    if !(jump_factor > 0.0) {
        return Err(KappaDomainError { kappa });
    }
    Ok(log_objective_continuous(pi, kappa, c, risk) + risk.lambda * libm::log(jump_factor))
}

/// The part of [`log_objective_f`] without the jump compensator
/// `λ ln(1-γκ)`; it is the drift of the exact log-wealth step.
#[inline]
pub fn log_objective_continuous(pi: f64, kappa: f64, c: &PointCoefficients, risk: &RiskParams) -> f64 {
    let (s, b) = (c.sigma, risk.b);
    c.r + c.excess() * pi + (risk.p - risk.a) * kappa - 0.5 * s * s * pi * pi + risk.rho * b * s * pi * kappa
        - 0.5 * b * b * kappa * kappa
}

/// Analytic Hessian `[[f_ππ, f_πκ], [f_πκ, f_κκ]]` of [`log_objective_f`].
pub fn log_objective_hessian(kappa: f64, c: &PointCoefficients, risk: &RiskParams) -> [[f64; 2]; 2] {
    let s = c.sigma;
    let jf = 1.0 - risk.gamma * kappa;
    let f_pp = -s * s;
    let f_pk = risk.rho * risk.b * s;
    let f_kk = -risk.b * risk.b - risk.lambda * risk.gamma * risk.gamma / (jf * jf);
    [[f_pp, f_pk], [f_pk, f_kk]]
}
