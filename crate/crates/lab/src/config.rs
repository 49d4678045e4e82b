//! JSON run configuration.

use std::path::Path;

use insurer_control_core::evaluation::OracleSpec;
use insurer_control_core::{GridFn, MarketCoefficients, Model, RiskParams, SimConfig, UtilitySpec};
use serde::Deserialize;

use crate::LabError;

/// A coefficient given either as one number or as one value per grid cell.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Series {
    Scalar(f64),
    Values(Vec<f64>),
}

impl Series {
    fn len(&self) -> usize {
        match self {
            Series::Scalar(_) => 1,
            Series::Values(v) => v.len(),
        }
    }

    fn broadcast(&self, name: &str, n: usize) -> Result<GridFn, LabError> {
        match self {
            Series::Scalar(x) => Ok(GridFn::filled(*x, n)),
            Series::Values(v) if v.len() == n => Ok(GridFn::new(v.clone())),
            Series::Values(v) if v.len() == 1 => Ok(GridFn::filled(v[0], n)),
            Series::Values(v) => Err(LabError::Config(format!("market.{name} has {} values, expected 1 or {n}", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub r: Series,
    pub mu: Series,
    pub sigma: Series,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Defaults to the longest coefficient array.
    pub n_grid: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKind {
    Log,
    Power,
    Exponential,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub kind: UtilityKind,
    pub alpha: Option<f64>,
    /// Constant of `c - x^α` for negative power exponents.
    pub c: Option<f64>,
}

impl UtilityConfig {
    pub fn spec(&self) -> Result<UtilitySpec, LabError> {
        let alpha = || self.alpha.ok_or_else(|| LabError::Config("utility.alpha is required".into()));
        Ok(match self.kind {
            UtilityKind::Log => UtilitySpec::Log,
            UtilityKind::Power => {
                let alpha = alpha()?;
                if alpha < 0.0 {
                    UtilitySpec::PowerNegative { alpha, c: self.c.unwrap_or(0.0) }
                } else {
                    UtilitySpec::Power { alpha }
                }
            }
            UtilityKind::Exponential => UtilitySpec::Exponential { alpha: alpha()? },
            UtilityKind::Quadratic => UtilitySpec::Quadratic { alpha: alpha()? },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub x0: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// Evaluation points of the `solve` report; defaults to the coefficient grid.
    pub n_points: Option<usize>,
}

/// A control to simulate in place of the optimum.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControlConfig {
    Optimal,
    Fractional { pi: Vec<f64>, kappa: Vec<f64> },
    Dollar { pi_tilde: Vec<f64>, #[serde(rename = "L")] liabilities: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub pi_range: Option<[f64; 2]>,
    pub kappa_range: Option<[f64; 2]>,
    pub spacing: Option<f64>,
    pub refinements: Option<u32>,
    pub window: Option<usize>,
    /// Spacing of the optional `(pi, kappa, f)` surface dump.
    pub surface_spacing: Option<f64>,
}

impl OracleConfig {
    pub fn spec(&self, risk: &RiskParams) -> OracleSpec {
        let d = OracleSpec::standard(risk);
        OracleSpec {
            pi_range: self.pi_range.map_or(d.pi_range, |[a, b]| (a, b)),
            kappa_range: self.kappa_range.map_or(d.kappa_range, |[a, b]| (a, b)),
            spacing: self.spacing.unwrap_or(d.spacing),
            refinements: self.refinements.unwrap_or(d.refinements),
            window: self.window.unwrap_or(d.window),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Step ladder of the discretisation study (quadratic identity, or Euler
    /// against the exact scheme for fractional controls).
    pub ladder: Option<Vec<usize>>,
    pub ladder_paths: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    R,
    Mu,
    Sigma,
    P,
    A,
    B,
    Gamma,
    Lambda,
    Rho,
    Alpha,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::R => "r",
            SweepParameter::Mu => "mu",
            SweepParameter::Sigma => "sigma",
            SweepParameter::P => "p",
            SweepParameter::A => "a",
            SweepParameter::B => "b",
            SweepParameter::Gamma => "gamma",
            SweepParameter::Lambda => "lambda",
            SweepParameter::Rho => "rho",
            SweepParameter::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    /// Number of equally spaced values from `from` to `to`, both included.
    pub count: Option<usize>,
}

impl SweepConfig {
    pub fn points(&self) -> Result<Vec<f64>, LabError> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        match (self.from, self.to, self.count) {
            (Some(a), Some(_), Some(1)) => Ok(vec![a]),
            (Some(a), Some(b), Some(n)) if n >= 2 => {
                Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
            }
            _ => Err(LabError::Config("sweep needs `values` or `from`, `to` and `count`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub market: MarketConfig,
    pub risk: RiskConfig,
    pub utility: UtilityConfig,
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub solve: SolveSection,
    pub control: Option<ControlConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub sweep: Option<SweepConfig>,
    /// Two-sided confidence level of reported intervals; 99% by default.
    pub confidence: Option<f64>,
    #[serde(default)]
    pub clamp_zero: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<Model, LabError> {
        let m = &self.market;
        let n = m.n_grid.unwrap_or_else(|| m.r.len().max(m.mu.len()).max(m.sigma.len()));
        if n == 0 {
            return Err(LabError::Config("market.n_grid must be positive".into()));
        }
        let market = MarketCoefficients {
            horizon: m.horizon,
            r: m.r.broadcast("r", n)?,
            mu: m.mu.broadcast("mu", n)?,
            sigma: m.sigma.broadcast("sigma", n)?,
        };
        let r = &self.risk;
        Ok(Model::new(market, RiskParams { p: r.p, a: r.a, b: r.b, gamma: r.gamma, lambda: r.lambda, rho: r.rho }))
    }

    /// Simulation settings; `seed` overrides the configured seed, and one of
    /// the two must be present.
    pub fn sim_config(&self, seed: Option<u64>) -> Result<SimConfig, LabError> {
        let s = self.sim.ok_or_else(|| LabError::Config("missing `sim` section".into()))?;
        let seed = seed.or(s.seed).ok_or_else(|| LabError::Config("sim.seed is required (or pass --seed)".into()))?;
        let cfg = SimConfig { x0: s.x0, n_steps: s.n_steps, n_paths: s.n_paths, seed };
        cfg.validate().map_err(|e| LabError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Initial wealth for the quadratic solver.
    pub fn x0(&self) -> f64 {
        self.sim.map_or(1.0, |s| s.x0)
    }

    pub fn z_value(&self) -> Result<f64, LabError> {
        match self.confidence {
            None => Ok(insurer_control_core::stats::Z_99),
            Some(level) if level > 0.0 && level < 1.0 => Ok(crate::report::normal_quantile(0.5 + 0.5 * level)),
            Some(level) => Err(LabError::Config(format!("confidence {level} outside (0, 1)"))),
        }
    }
}
