//! Wealth simulators on a uniform time grid.
//!
//! * Fractional controls `(π, κ)` use the exact exponential scheme
//!   `X_{k+1} = X_k exp{g Δt + (σπ-ρbκ) ΔW¹ - b√(1-ρ²)κ ΔW² + ln(1-γκ) ΔN}`
//!   with `g = r + (μ-r)π + (p-a)κ - σ²π²/2 + ρbσπκ - b²κ²/2`, so wealth
//!   stays strictly positive.
//! * Dollar controls `(π̃, L)` use Euler–Maruyama on the surplus equation.
//! * The quadratic-utility feedback updates the density `Z` exactly and the
//!   wealth by an Euler step with controls read off `Z_k`.

use alloc::vec::Vec;

use crate::control::{AdmissibilityError, DollarControl, FractionalControl};
use crate::exec::Executor;
use crate::grid::lcm;
use crate::model::Model;
use crate::noise::{NoiseSpec, PathNoise, PathNoiseIter, StepNoise};
use crate::solvers::QuadraticIngredients;
use crate::stats::{pairwise_sum, MCEstimate};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub x0: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(SimError::InitialWealth(self.x0));
        }
        if self.n_steps == 0 {
            return Err(SimError::NoSteps);
        }
        if self.n_paths == 0 {
            return Err(SimError::NoPaths);
        }
        Ok(())
    }

    pub fn dt(&self, horizon: f64) -> f64 {
        horizon / self.n_steps as f64
    }

    pub fn noise_spec(&self, model: &Model) -> NoiseSpec {
        NoiseSpec { seed: self.seed, n_steps: self.n_steps, dt: self.dt(model.horizon()), lambda: model.risk.lambda }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("initial wealth must be positive and finite, got {0}")]
    InitialWealth(f64),
    #[error("n_steps must be at least 1")]
    NoSteps,
    #[error("n_paths must be at least 1")]
    NoPaths,
    #[error("{n_steps} steps do not refine a grid of {cells} cells")]
    StepMismatch { n_steps: usize, cells: usize },
    #[error("inadmissible control: {0}")]
    Inadmissible(#[from] AdmissibilityError),
    #[error("initial density {0} must be positive")]
    InitialDensity(f64),
    #[error("non-finite wealth on path {path} at step {step}")]
    NonFinite { path: usize, step: usize },
}

/// A control rule the simulator can follow.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Exact exponential scheme.
    Fractional(FractionalControl),
    /// Euler scheme.
    Dollar(DollarControl),
    /// Euler scheme with `π̃ = πX`, `L = κX`: a fractional control expressed in dollars.
    Proportional(FractionalControl),
    /// Feedback `π̃ = s_π m(t) Z`, `L = s_L m(t) Z` of the quadratic optimum.
    QuadraticFeedback { ingredients: QuadraticIngredients, pi_scale: f64, l_scale: f64 },
}

impl Policy {
    pub fn quadratic(ingredients: QuadraticIngredients) -> Self {
        Policy::QuadraticFeedback { ingredients, pi_scale: 1.0, l_scale: 1.0 }
    }

    fn grid_len(&self) -> usize {
        match self {
            Policy::Fractional(c) | Policy::Proportional(c) => lcm(c.pi.len(), c.kappa.len()),
            Policy::Dollar(c) => lcm(c.pi_tilde.len(), c.liabilities.len()),
            Policy::QuadraticFeedback { ingredients: q, .. } => {
                lcm(lcm(q.rate.len(), q.phi.len()), lcm(q.xi.len(), q.pi_loading.len()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ExactStep {
    drift: f64,
    v1: f64,
    v2: f64,
    jump_log: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EulerStep {
    rate: f64,
    offset: f64,
    v1: f64,
    v2: f64,
    jump: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FeedbackStep {
    rate: f64,
    pi_drift: f64,
    pi_v1: f64,
    l_drift: f64,
    l_v1: f64,
    l_v2: f64,
    l_jump: f64,
    z_drift: f64,
    z_v1: f64,
    z_v2: f64,
    z_jump: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Scheme {
    Exact(Vec<ExactStep>),
    /// Increments are affine in `X_k`: `ΔX = X_k·(rate + v1 ΔW¹ - v2 ΔW² - jump ΔN)·…`
    /// for proportional controls, or additive for fixed dollar controls.
    Euler { steps: Vec<EulerStep>, proportional: bool },
    Feedback { steps: Vec<FeedbackStep>, z0: f64 },
}

/// A policy compiled against a model and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    scheme: Scheme,
    x0: f64,
    n_steps: usize,
    jump_rate_dt: f64,
}

/// Outcome of a single path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub terminal: f64,
    pub jumps: u64,
    /// Terminal density, for the quadratic feedback.
    pub z_terminal: Option<f64>,
    pub min_wealth: f64,
    /// Number of grid times `t_k`, `k ≥ 1`, with `X ≤ 0`.
    pub nonpositive: u32,
    /// `∫ ln(1-γκ) dM`, for fractional controls (zero otherwise).
    pub jump_martingale: f64,
}

/// A path outcome with optional trajectories `X(t_k)` and `Z(t_k)`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub outcome: PathOutcome,
    pub wealth: Option<Vec<f64>>,
    pub density: Option<Vec<f64>>,
}

impl Simulator {
    /// Fails on an inadmissible control, or when `n_steps` is not a multiple
    /// of the coefficient or control grid.
    pub fn new(policy: &Policy, model: &Model, x0: f64, n_steps: usize) -> Result<Self, SimError> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(SimError::InitialWealth(x0));
        }
        if n_steps == 0 {
            return Err(SimError::NoSteps);
        }
        let cells = lcm(model.market.n_grid(), policy.grid_len());
        if !n_steps.is_multiple_of(cells) {
            return Err(SimError::StepMismatch { n_steps, cells });
        }
        let risk = &model.risk;
        let horizon = model.horizon();
        let dt = horizon / n_steps as f64;
        let sv = risk.orthogonal_vol();
        let pa = risk.p - risk.a;
        let scheme = match policy {
            Policy::Fractional(u) => {
                u.check(risk)?;
                Scheme::Exact(
                    (0..n_steps)
                        .map(|k| {
                            let c = model.market.on_step(k, n_steps);
                            let (pi, kappa) = (u.pi.on_step(k, n_steps), u.kappa.on_step(k, n_steps));
                            let g = c.r + c.excess() * pi + pa * kappa - 0.5 * c.sigma * c.sigma * pi * pi
                                + risk.rho * risk.b * c.sigma * pi * kappa
                                - 0.5 * risk.b * risk.b * kappa * kappa;
                            ExactStep {
                                drift: g * dt,
                                v1: c.sigma * pi - risk.rho * risk.b * kappa,
                                v2: sv * kappa,
                                jump_log: libm::log1p(-risk.gamma * kappa),
                            }
                        })
                        .collect(),
                )
            }
            Policy::Proportional(u) => {
                u.check(risk)?;
                Scheme::Euler {
                    steps: (0..n_steps)
                        .map(|k| {
                            let c = model.market.on_step(k, n_steps);
                            let (pi, kappa) = (u.pi.on_step(k, n_steps), u.kappa.on_step(k, n_steps));
                            EulerStep {
                                rate: (c.r + c.excess() * pi + pa * kappa) * dt,
                                offset: 0.0,
                                v1: c.sigma * pi - risk.rho * risk.b * kappa,
                                v2: sv * kappa,
                                jump: risk.gamma * kappa,
                            }
                        })
                        .collect(),
                    proportional: true,
                }
            }
            Policy::Dollar(u) => {
                u.check()?;
                Scheme::Euler {
                    steps: (0..n_steps)
                        .map(|k| {
                            let c = model.market.on_step(k, n_steps);
                            let (pt, l) = (u.pi_tilde.on_step(k, n_steps), u.liabilities.on_step(k, n_steps));
                            EulerStep {
                                rate: c.r * dt,
                                offset: (c.excess() * pt + pa * l) * dt,
                                v1: c.sigma * pt - risk.rho * risk.b * l,
                                v2: sv * l,
                                jump: risk.gamma * l,
                            }
                        })
                        .collect(),
                    proportional: false,
                }
            }
            Policy::QuadraticFeedback { ingredients: q, pi_scale, l_scale } => {
                if !(q.z0 > 0.0) {
                    return Err(SimError::InitialDensity(q.z0));
                }
                let steps = (0..n_steps)
                    .map(|k| {
                        let t = k as f64 * dt;
                        let c = model.market.on_step(k, n_steps);
                        let m = q.loading(t);
                        let phi = q.phi.on_step(k, n_steps);
                        let pi_coef = pi_scale * m * q.pi_loading.on_step(k, n_steps);
                        let l_coef = l_scale * m * phi;
                        let th = c.sharpe();
                        FeedbackStep {
                            rate: c.r * dt,
                            pi_drift: c.excess() * pi_coef * dt,
                            pi_v1: c.sigma * pi_coef,
                            l_drift: pa * l_coef * dt,
                            l_v1: -risk.rho * risk.b * l_coef,
                            l_v2: sv * l_coef,
                            l_jump: risk.gamma * l_coef,
                            z_drift: -(0.5 * th * th + 0.5 * sv * sv * phi * phi + risk.lambda * risk.gamma * phi) * dt,
                            z_v1: -th,
                            z_v2: sv * phi,
                            z_jump: libm::log1p(risk.gamma * phi),
                        }
                    })
                    .collect();
                Scheme::Feedback { steps, z0: q.z0 }
            }
        };
        Ok(Self { scheme, x0, n_steps, jump_rate_dt: risk.lambda * dt })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Runs one path on `noise`, which must yield exactly `n_steps` steps.
    /// `path` only labels errors.
    pub fn run<I>(&self, path: usize, noise: I, record: bool) -> Result<PathRecord, SimError>
    where
        I: IntoIterator<Item = StepNoise>,
    {
        let mut x = self.x0;
        let mut z = match self.scheme {
            Scheme::Feedback { z0, .. } => z0,
            _ => 0.0,
        };
        let mut wealth = record.then(|| {
            let mut v = Vec::with_capacity(self.n_steps + 1);
            v.push(x);
            v
        });
        let mut density = match (&self.scheme, record) {
            (Scheme::Feedback { .. }, true) => {
                let mut v = Vec::with_capacity(self.n_steps + 1);
                v.push(z);
                Some(v)
            }
            _ => None,
        };
        let mut jumps = 0u64;
        let mut min_wealth = x;
        let mut nonpositive = 0u32;
        let mut jump_martingale = 0.0;
        let mut taken = 0usize;
        for (k, s) in noise.into_iter().enumerate() {
            if k >= self.n_steps {
                break;
            }
            taken += 1;
            let dn = s.dn as f64;
            jumps += s.dn as u64;
            match &self.scheme {
                Scheme::Exact(steps) => {
                    let e = steps[k];
                    let mut expo = e.drift + e.v1 * s.dw1 - e.v2 * s.dw2;
                    if s.dn > 0 {
                        expo += e.jump_log * dn;
                    }
                    if e.jump_log != 0.0 {
                        jump_martingale += e.jump_log * (dn - self.jump_rate_dt);
                    }
                    x *= libm::exp(expo);
                }
                Scheme::Euler { steps, proportional } => {
                    let e = steps[k];
                    let shock = e.v1 * s.dw1 - e.v2 * s.dw2 - e.jump * dn;
                    x += if *proportional { x * (e.rate + shock) } else { x * e.rate + e.offset + shock };
                }
                Scheme::Feedback { steps, .. } => {
                    let e = steps[k];
                    x += x * e.rate
                        + z * (e.pi_drift + e.l_drift + (e.pi_v1 + e.l_v1) * s.dw1 - e.l_v2 * s.dw2 - e.l_jump * dn);
                    let mut expo = e.z_drift + e.z_v1 * s.dw1 + e.z_v2 * s.dw2;
                    if s.dn > 0 {
                        expo += e.z_jump * dn;
                    }
                    z *= libm::exp(expo);
                    if let Some(d) = density.as_mut() {
                        d.push(z);
                    }
                }
            }
            if !x.is_finite() {
                return Err(SimError::NonFinite { path, step: k + 1 });
            }
            if x <= 0.0 {
                nonpositive += 1;
            }
            if x < min_wealth {
                min_wealth = x;
            }
            if let Some(w) = wealth.as_mut() {
                w.push(x);
            }
        }
        assert_eq!(taken, self.n_steps, "noise shorter than the step count");
        let z_terminal = matches!(self.scheme, Scheme::Feedback { .. }).then_some(z);
        Ok(PathRecord {
            outcome: PathOutcome { terminal: x, jumps, z_terminal, min_wealth, nonpositive, jump_martingale },
            wealth,
            density,
        })
    }
}

/// Results of an ensemble, in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub n_steps: usize,
    pub dt: f64,
    pub outcomes: Vec<PathOutcome>,
    /// `X(t_k)` per path, when recorded.
    pub wealth: Option<Vec<Vec<f64>>>,
    /// `Z(t_k)` per path, for recorded quadratic runs.
    pub density: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    /// Total count of nonpositive wealth values over all paths and steps.
    pub positivity_violations: u64,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn terminal_values(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.terminal).collect()
    }

    pub fn positivity_violations(&self) -> u64 {
        self.outcomes.iter().map(|o| o.nonpositive as u64).sum()
    }

    pub fn summary(&self, z: f64) -> PathSummary {
        let xs = self.terminal_values();
        let e = MCEstimate::from_samples(&xs, z);
        PathSummary {
            mean: e.mean,
            stderr: e.stderr,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            positivity_violations: self.positivity_violations(),
        }
    }

    /// Mean of `∫ ln(1-γκ) dM` across paths.
    pub fn jump_martingale_mean(&self) -> f64 {
        let v: Vec<f64> = self.outcomes.iter().map(|o| o.jump_martingale).collect();
        pairwise_sum(&v) / v.len() as f64
    }

    fn from_records(records: Vec<PathRecord>, n_steps: usize, dt: f64, record: bool) -> Self {
        let mut outcomes = Vec::with_capacity(records.len());
        let mut wealth = record.then(Vec::new);
        let mut density: Option<Vec<Vec<f64>>> = None;
        for r in records {
            outcomes.push(r.outcome);
            if let (Some(w), Some(x)) = (wealth.as_mut(), r.wealth) {
                w.push(x);
            }
            if let Some(d) = r.density {
                density.get_or_insert_with(Vec::new).push(d);
            }
        }
        Self { n_steps, dt, outcomes, wealth, density }
    }
}

fn first_error<T>(results: Vec<Result<T, SimError>>) -> Result<Vec<T>, SimError> {
    results.into_iter().collect()
}

/// Simulates `policy` over `config.n_paths` paths.
pub fn simulate<E: Executor>(
    policy: &Policy,
    model: &Model,
    config: &SimConfig,
    record: bool,
    exec: &E,
) -> Result<PathSet, SimError> {
    config.validate()?;
    let sim = Simulator::new(policy, model, config.x0, config.n_steps)?;
    let spec = config.noise_spec(model);
    let records = exec.map(config.n_paths, |i| sim.run(i, PathNoiseIter::new(&spec, i as u64), record));
    Ok(PathSet::from_records(first_error(records)?, config.n_steps, spec.dt, record))
}

pub fn simulate_fractional<E: Executor>(
    control: &FractionalControl,
    model: &Model,
    config: &SimConfig,
    exec: &E,
) -> Result<PathSet, SimError> {
    simulate(&Policy::Fractional(control.clone()), model, config, false, exec)
}

pub fn simulate_dollar<E: Executor>(
    control: &DollarControl,
    model: &Model,
    config: &SimConfig,
    exec: &E,
) -> Result<PathSet, SimError> {
    simulate(&Policy::Dollar(control.clone()), model, config, false, exec)
}

pub fn simulate_quadratic_feedback<E: Executor>(
    ingredients: &QuadraticIngredients,
    model: &Model,
    config: &SimConfig,
    exec: &E,
) -> Result<PathSet, SimError> {
    simulate(&Policy::quadratic(ingredients.clone()), model, config, false, exec)
}

/// Simulates several policies on common noise: path `i` of every returned
/// set is driven by the same increments.
pub fn simulate_panel<E: Executor>(
    policies: &[Policy],
    model: &Model,
    config: &SimConfig,
    exec: &E,
) -> Result<Vec<PathSet>, SimError> {
    config.validate()?;
    let sims = policies
        .iter()
        .map(|p| Simulator::new(p, model, config.x0, config.n_steps))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = config.noise_spec(model);
    let rows = exec.map(config.n_paths, |i| {
        let noise = PathNoise::generate(&spec, i as u64);
        sims.iter()
            .map(|s| s.run(i, noise.steps.iter().copied(), false).map(|r| r.outcome))
            .collect::<Result<Vec<_>, _>>()
    });
    let rows = first_error(rows)?;
    let mut sets: Vec<PathSet> = (0..sims.len())
        .map(|_| PathSet { n_steps: config.n_steps, dt: spec.dt, outcomes: Vec::with_capacity(rows.len()), wealth: None, density: None })
        .collect();
    for row in rows {
        for (set, o) in sets.iter_mut().zip(row) {
            set.outcomes.push(o);
        }
    }
    Ok(sets)
}
