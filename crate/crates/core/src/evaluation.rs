//! Expected-utility estimates, the brute-force log oracle, optimality
//! diagnostics and discretisation studies.

use alloc::string::String;
use alloc::vec::Vec;

use crate::control::{DollarControl, FractionalControl};
use crate::exec::Executor;
use crate::grid::lcm;
use crate::model::{log_objective_f, Model, PointCoefficients, RiskParams};
use crate::noise::{NoiseSpec, PathNoise};
use crate::sde::{simulate_panel, PathSet, Policy, SimConfig, SimError, Simulator};
use crate::solvers::{OptimalControls, QuadraticIngredients, StrategySolution};
use crate::stats::{pairwise_sum, MCEstimate};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{utility} utility undefined at the terminal wealth of {} path(s), first path {}", .paths.len(), .paths[0])]
    Domain { utility: UtilitySpec, paths: Vec<usize> },
    #[error("empty path set")]
    NoPaths,
    #[error("empty search range")]
    EmptyRange,
    #[error("path sets of different sizes cannot be paired")]
    Unpaired,
    #[error("convergence ladder needs at least three increasing rungs dividing the finest")]
    Ladder,
    #[error(transparent)]
    Simulation(#[from] SimError),
}

fn utility_samples(paths: &PathSet, utility: &UtilitySpec) -> Result<Vec<f64>, EvalError> {
    let mut bad = Vec::new();
    let values: Vec<f64> = paths
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            utility.utility(o.terminal).unwrap_or_else(|_| {
                bad.push(i);
                f64::NAN
            })
        })
        .collect();
    if bad.is_empty() {
        Ok(values)
    } else {
        Err(EvalError::Domain { utility: *utility, paths: bad })
    }
}

/// Estimate of `E[U(X_T)]`.
pub fn estimate_expected_utility(paths: &PathSet, utility: &UtilitySpec, z: f64) -> Result<MCEstimate, EvalError> {
    if paths.is_empty() {
        return Err(EvalError::NoPaths);
    }
    Ok(MCEstimate::from_samples(&utility_samples(paths, utility)?, z))
}

/// Search rectangle and resolution of the log oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSpec {
    pub pi_range: (f64, f64),
    pub kappa_range: (f64, f64),
    pub spacing: f64,
    /// Rounds of 10× local refinement.
    pub refinements: u32,
    /// Half-width, in cells of the previous level, of each refinement window.
    pub window: usize,
}

impl OracleSpec {
    /// `π ∈ [0, 3]`, `κ ∈ [0, (1-10⁻⁶)/γ]`, spacing `10⁻³`, two refinements.
    pub fn standard(risk: &RiskParams) -> Self {
        Self {
            pi_range: (0.0, 3.0),
            kappa_range: (0.0, (1.0 - 1e-6) / risk.gamma),
            spacing: 1e-3,
            refinements: 2,
            window: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub pi: f64,
    pub kappa: f64,
    pub value: f64,
    /// Spacing of the finest grid scanned.
    pub spacing: f64,
    pub refinement_depth: u32,
    pub evaluations: u64,
}

fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = libm::floor((hi - lo) / h + 1e-9) as usize;
    (0..=n).map(|i| lo + i as f64 * h).collect()
}

/// Argmax of `f` over the lattice `pis × kappas`; ties go to the smallest
/// `(π, κ)` in lexicographic order.
fn scan<E: Executor>(c: &PointCoefficients, risk: &RiskParams, pis: &[f64], kappas: &[f64], exec: &E) -> Option<(usize, usize, f64)> {
    let kterm: Vec<f64> = kappas
        .iter()
        .map(|&k| {
            let one = 1.0 - risk.gamma * k;
            if one > 0.0 {
                (risk.p - risk.a) * k - 0.5 * risk.b * risk.b * k * k + risk.lambda * libm::log(one)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let rows = exec.map(pis.len(), |i| {
        let pi = pis[i];
        let base = c.r + c.excess() * pi - 0.5 * c.sigma * c.sigma * pi * pi;
        let cross = risk.rho * risk.b * c.sigma * pi;
        let mut best: Option<(usize, f64)> = None;
        for (j, (&k, &kt)) in kappas.iter().zip(&kterm).enumerate() {
            let v = base + cross * k + kt;
            if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        best
    });
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, row) in rows.into_iter().enumerate() {
        if let Some((j, v)) = row {
            if best.is_none_or(|(_, _, b)| v > b) {
                best = Some((i, j, v));
            }
        }
    }
    best
}

/// Brute-force maximiser of the log objective `f(π, κ)` at fixed
/// coefficients: a full lattice scan followed by local 10× refinements.
pub fn grid_oracle_log<E: Executor>(
    c: &PointCoefficients,
    risk: &RiskParams,
    spec: &OracleSpec,
    exec: &E,
) -> Result<OracleResult, EvalError> {
    let (plo, phi) = spec.pi_range;
    let (klo, khi) = spec.kappa_range;
    if !(plo <= phi && klo <= khi && spec.spacing > 0.0) || !(klo >= 0.0 && risk.gamma * klo < 1.0) {
        return Err(EvalError::EmptyRange);
    }
    let mut h = spec.spacing;
    let (mut pis, mut kappas) = (axis(plo, phi, h), axis(klo, khi, h));
    let mut evaluations = (pis.len() * kappas.len()) as u64;
    let (i, j, _) = scan(c, risk, &pis, &kappas, exec).ok_or(EvalError::EmptyRange)?;
    let (mut pi, mut kappa) = (pis[i], kappas[j]);
    for _ in 0..spec.refinements {
        let w = spec.window as f64 * h;
        let (lo_p, hi_p) = ((pi - w).max(plo), (pi + w).min(phi));
        let (lo_k, hi_k) = ((kappa - w).max(klo), (kappa + w).min(khi));
        h /= 10.0;
        pis = axis(lo_p, hi_p, h);
        kappas = axis(lo_k, hi_k, h);
        evaluations += (pis.len() * kappas.len()) as u64;
        let (i, j, _) = scan(c, risk, &pis, &kappas, exec).ok_or(EvalError::EmptyRange)?;
        pi = pis[i];
        kappa = kappas[j];
    }
    let value = log_objective_f(pi, kappa, c, risk).map_err(|_| EvalError::EmptyRange)?;
    Ok(OracleResult { pi, kappa, value, spacing: h, refinement_depth: spec.refinements, evaluations })
}

/// The oracle at every cell of a piecewise-constant coefficient grid.
pub fn grid_oracle_log_model<E: Executor>(model: &Model, spec: &OracleSpec, exec: &E) -> Result<Vec<OracleResult>, EvalError> {
    (0..model.market.n_grid())
        .map(|j| grid_oracle_log(&model.market.point(j), &model.risk, spec, exec))
        .collect()
}

/// `(π, κ, f)` on a lattice, row-major in `π`; points outside the domain
/// of `f` are skipped.
pub fn log_objective_surface(c: &PointCoefficients, risk: &RiskParams, pi_range: (f64, f64), kappa_range: (f64, f64), spacing: f64) -> Vec<[f64; 3]> {
    let pis = axis(pi_range.0, pi_range.1, spacing);
    let kappas = axis(kappa_range.0, kappa_range.1, spacing);
    let mut out = Vec::with_capacity(pis.len() * kappas.len());
    for &p in &pis {
        for &k in &kappas {
            if let Ok(v) = log_objective_f(p, k, c, risk) {
                out.push([p, k, v]);
            }
        }
    }
    out
}

/// A named control to compare with the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Challenger {
    pub name: String,
    pub policy: Policy,
}

impl Challenger {
    pub fn new(name: &str, policy: Policy) -> Self {
        Self { name: String::from(name), policy }
    }
}

/// The optimal control of `solution` as a simulation policy.
pub fn optimal_policy(solution: &StrategySolution) -> Policy {
    match &solution.controls {
        OptimalControls::Fractional(u) => Policy::Fractional(u.clone()),
        OptimalControls::Dollar(u) => Policy::Dollar(u.clone()),
        OptimalControls::QuadraticFeedback(q) => Policy::quadratic(q.clone()),
    }
}

fn scaled(solution: &StrategySolution, pi_scale: f64, second_scale: f64) -> Policy {
    match &solution.controls {
        OptimalControls::Fractional(u) => Policy::Fractional(u.scaled(pi_scale, second_scale)),
        OptimalControls::Dollar(u) => Policy::Dollar(u.scaled(pi_scale, second_scale)),
        OptimalControls::QuadraticFeedback(q) => {
            Policy::QuadraticFeedback { ingredients: q.clone(), pi_scale, l_scale: second_scale }
        }
    }
}

/// Riskless, half of the optimum, and the optimum with either component
/// raised by 10%.
pub fn standard_challengers(solution: &StrategySolution) -> Vec<Challenger> {
    let zero = if solution.utility.uses_fractional_control() {
        Policy::Fractional(FractionalControl::zero())
    } else {
        Policy::Dollar(DollarControl::zero())
    };
    let second = if solution.utility.uses_fractional_control() { "kappa_x1.1" } else { "L_x1.1" };
    alloc::vec![
        Challenger::new("zero", zero),
        Challenger::new("half", scaled(solution, 0.5, 0.5)),
        Challenger::new("pi_x1.1", scaled(solution, 1.1, 1.0)),
        Challenger::new(second, scaled(solution, 1.0, 1.1)),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceEntry {
    pub name: String,
    pub value: MCEstimate,
    /// `Ĵ(u*) - Ĵ(u)`
    pub delta: f64,
    /// Standard error of the paired differences.
    pub paired_stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub optimal: MCEstimate,
    pub entries: Vec<DominanceEntry>,
    pub pass: bool,
}

/// Dominance verdict from paths simulated on common noise. A challenger
/// passes when `ΔJ ≥ -3·se`.
pub fn dominance_from_paths(
    utility: &UtilitySpec,
    optimal: &PathSet,
    challengers: &[(&str, &PathSet)],
    z: f64,
) -> Result<DominanceReport, EvalError> {
    if optimal.is_empty() {
        return Err(EvalError::NoPaths);
    }
    let u_opt = utility_samples(optimal, utility)?;
    let mut entries = Vec::with_capacity(challengers.len());
    for (name, set) in challengers {
        if set.len() != optimal.len() {
            return Err(EvalError::Unpaired);
        }
        let u = utility_samples(set, utility)?;
        let diff: Vec<f64> = u_opt.iter().zip(&u).map(|(a, b)| a - b).collect();
        let d = MCEstimate::from_samples(&diff, z);
        entries.push(DominanceEntry {
            name: String::from(*name),
            value: MCEstimate::from_samples(&u, z),
            delta: d.mean,
            paired_stderr: d.stderr,
            pass: d.mean >= -3.0 * d.stderr,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(DominanceReport { optimal: MCEstimate::from_samples(&u_opt, z), entries, pass })
}

/// Simulates the optimum and `challengers` on common noise and compares
/// their expected utilities.
pub fn dominance_test<E: Executor>(
    solution: &StrategySolution,
    challengers: &[Challenger],
    config: &SimConfig,
    z: f64,
    exec: &E,
) -> Result<DominanceReport, EvalError> {
    let sets = simulate_with_optimal(solution, challengers, config, exec)?;
    let named: Vec<(&str, &PathSet)> = challengers.iter().map(|c| c.name.as_str()).zip(&sets[1..]).collect();
    dominance_from_paths(&solution.utility, &sets[0], &named, z)
}

fn simulate_with_optimal<E: Executor>(
    solution: &StrategySolution,
    challengers: &[Challenger],
    config: &SimConfig,
    exec: &E,
) -> Result<Vec<PathSet>, EvalError> {
    let mut policies = Vec::with_capacity(challengers.len() + 1);
    policies.push(optimal_policy(solution));
    policies.extend(challengers.iter().map(|c| c.policy.clone()));
    Ok(simulate_panel(&policies, &solution.model, config, exec)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyEntry {
    pub name: String,
    pub estimate: MCEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyPair {
    pub first: usize,
    pub second: usize,
    pub difference: f64,
    pub combined_stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyReport {
    pub entries: Vec<ConstancyEntry>,
    pub pairs: Vec<ConstancyPair>,
    pub pass: bool,
}

/// Estimates `c_u = E[U'(X*_T) X^u_T]` for every named set (the optimum
/// included) and checks that they agree pairwise within three combined
/// standard errors.
pub fn constancy_from_paths(
    utility: &UtilitySpec,
    optimal: &PathSet,
    controls: &[(&str, &PathSet)],
    z: f64,
) -> Result<ConstancyReport, EvalError> {
    if optimal.is_empty() {
        return Err(EvalError::NoPaths);
    }
    let mut entries = Vec::with_capacity(controls.len());
    for (name, set) in controls {
        if set.len() != optimal.len() {
            return Err(EvalError::Unpaired);
        }
        let mut bad = Vec::new();
        let samples: Vec<f64> = optimal
            .outcomes
            .iter()
            .zip(&set.outcomes)
            .enumerate()
            .map(|(i, (o, u))| {
                utility.marginal_times(o.terminal, u.terminal).unwrap_or_else(|_| {
                    bad.push(i);
                    f64::NAN
                })
            })
            .collect();
        if !bad.is_empty() {
            return Err(EvalError::Domain { utility: *utility, paths: bad });
        }
        entries.push(ConstancyEntry { name: String::from(*name), estimate: MCEstimate::from_samples(&samples, z) });
    }
    let mut pairs = Vec::new();
    for a in 0..entries.len() {
        for b in a + 1..entries.len() {
            let (ea, eb) = (&entries[a].estimate, &entries[b].estimate);
            let difference = ea.mean - eb.mean;
            let combined_stderr = libm::sqrt(ea.stderr * ea.stderr + eb.stderr * eb.stderr);
            pairs.push(ConstancyPair {
                first: a,
                second: b,
                difference,
                combined_stderr,
                pass: libm::fabs(difference) <= 3.0 * combined_stderr,
            });
        }
    }
    let pass = pairs.iter().all(|p| p.pass);
    Ok(ConstancyReport { entries, pairs, pass })
}

/// Simulates the optimum and `controls` on common noise and runs the
/// constancy check; the optimum itself is the first entry.
pub fn constancy_check<E: Executor>(
    solution: &StrategySolution,
    controls: &[Challenger],
    config: &SimConfig,
    z: f64,
    exec: &E,
) -> Result<ConstancyReport, EvalError> {
    let sets = simulate_with_optimal(solution, controls, config, exec)?;
    let mut named: Vec<(&str, &PathSet)> = alloc::vec![("optimal", &sets[0])];
    named.extend(controls.iter().map(|c| c.name.as_str()).zip(&sets[1..]));
    constancy_from_paths(&solution.utility, &sets[0], &named, z)
}

/// One rung of a discretisation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_steps: usize,
    pub dt: f64,
    pub error: f64,
    pub stderr: f64,
    /// `log(e_prev/e) / log(dt_prev/dt)`, from the previous rung.
    pub order: Option<f64>,
}

/// Fills in empirical orders between consecutive rungs.
pub fn with_orders(rows: &mut [ConvergenceRow]) {
    for i in 1..rows.len() {
        let (p, c) = (rows[i - 1], rows[i]);
        rows[i].order = (p.error > 0.0 && c.error > 0.0).then(|| libm::log(p.error / c.error) / libm::log(p.dt / c.dt));
    }
}

/// `|x₀e^{rT} - x₀(1+rΔt)^n|`
pub fn riskless_euler_gap(x0: f64, r: f64, horizon: f64, n_steps: usize) -> f64 {
    let dt = horizon / n_steps as f64;
    libm::fabs(x0 * libm::exp(r * horizon) - x0 * libm::pow(1.0 + r * dt, n_steps as f64))
}

pub fn riskless_euler_study(x0: f64, r: f64, horizon: f64, ladder: &[usize]) -> Result<Vec<ConvergenceRow>, EvalError> {
    check_ladder(ladder)?;
    let mut rows: Vec<ConvergenceRow> = ladder
        .iter()
        .map(|&n| ConvergenceRow {
            n_steps: n,
            dt: horizon / n as f64,
            error: riskless_euler_gap(x0, r, horizon, n),
            stderr: 0.0,
            order: None,
        })
        .collect();
    with_orders(&mut rows);
    Ok(rows)
}

fn check_ladder(ladder: &[usize]) -> Result<usize, EvalError> {
    if ladder.len() < 3 || ladder[0] == 0 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvalError::Ladder);
    }
    let finest = *ladder.last().unwrap();
    if ladder.iter().any(|&n| !finest.is_multiple_of(n)) {
        return Err(EvalError::Ladder);
    }
    Ok(finest)
}

/// Runs `metric` on every rung, with each path's noise drawn once on the
/// finest grid and summed onto the coarser ones.
fn ladder_study<E, F>(
    model: &Model,
    ladder: &[usize],
    n_paths: usize,
    seed: u64,
    exec: &E,
    metric: F,
) -> Result<Vec<ConvergenceRow>, EvalError>
where
    E: Executor,
    F: Fn(usize, usize, &PathNoise) -> Result<f64, SimError> + Sync + Send,
{
    let finest = check_ladder(ladder)?;
    if n_paths == 0 {
        return Err(EvalError::NoPaths);
    }
    let horizon = model.horizon();
    let spec = NoiseSpec { seed, n_steps: finest, dt: horizon / finest as f64, lambda: model.risk.lambda };
    let per_path = exec.map(n_paths, |i| {
        let fine = PathNoise::generate(&spec, i as u64);
        ladder
            .iter()
            .enumerate()
            .map(|(r, &n)| metric(r, i, &fine.aggregate(finest / n)))
            .collect::<Result<Vec<f64>, SimError>>()
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<ConvergenceRow> = ladder
        .iter()
        .enumerate()
        .map(|(r, &n)| {
            let errs: Vec<f64> = per_path.iter().map(|v| v[r]).collect();
            let e = MCEstimate::from_samples(&errs, 0.0);
            ConvergenceRow { n_steps: n, dt: horizon / n as f64, error: e.mean, stderr: e.stderr, order: None }
        })
        .collect();
    with_orders(&mut rows);
    Ok(rows)
}

/// `E|Z_T - (1 - αX_T)|` under the quadratic feedback on each rung.
pub fn quadratic_identity_study<E: Executor>(
    ingredients: &QuadraticIngredients,
    model: &Model,
    ladder: &[usize],
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<ConvergenceRow>, EvalError> {
    let policy = Policy::quadratic(ingredients.clone());
    let sims = ladder
        .iter()
        .map(|&n| Simulator::new(&policy, model, ingredients.x0, n))
        .collect::<Result<Vec<_>, _>>()?;
    let alpha = ingredients.alpha;
    ladder_study(model, ladder, n_paths, seed, exec, |r, i, noise| {
        let o = sims[r].run(i, noise.steps.iter().copied(), false)?.outcome;
        Ok(libm::fabs(o.z_terminal.unwrap_or(f64::NAN) - (1.0 - alpha * o.terminal)))
    })
}

/// `E|X_Euler(T) - X_exact(T)|` for a fractional control re-expressed in
/// dollars, on each rung.
pub fn euler_vs_exact_study<E: Executor>(
    control: &FractionalControl,
    model: &Model,
    x0: f64,
    ladder: &[usize],
    n_paths: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<ConvergenceRow>, EvalError> {
    let build = |p: Policy| {
        ladder.iter().map(|&n| Simulator::new(&p, model, x0, n)).collect::<Result<Vec<_>, _>>()
    };
    let euler = build(Policy::Proportional(control.clone()))?;
    let exact = build(Policy::Fractional(control.clone()))?;
    ladder_study(model, ladder, n_paths, seed, exec, |r, i, noise| {
        let a = euler[r].run(i, noise.steps.iter().copied(), false)?.outcome.terminal;
        let b = exact[r].run(i, noise.steps.iter().copied(), false)?.outcome.terminal;
        Ok(libm::fabs(a - b))
    })
}

/// `∫₀ᵀ f(π(t), κ(t)) dt` for a fractional control on the model grid.
pub fn log_objective_integral(control: &FractionalControl, model: &Model) -> Result<f64, crate::model::KappaDomainError> {
    let cells = lcm(model.market.n_grid(), lcm(control.pi.len(), control.kappa.len()));
    let dt = model.horizon() / cells as f64;
    let vals = (0..cells)
        .map(|k| {
            let c = model.market.on_step(k, cells);
            log_objective_f(control.pi.on_step(k, cells), control.kappa.on_step(k, cells), &c, &model.risk).map(|v| v * dt)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(pairwise_sum(&vals))
}
