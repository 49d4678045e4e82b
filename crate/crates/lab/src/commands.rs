//! The six subcommands.

use insurer_control_core::evaluation::{
    constancy_from_paths, dominance_from_paths, estimate_expected_utility, euler_vs_exact_study, grid_oracle_log,
    log_objective_integral, log_objective_surface, optimal_policy, quadratic_identity_study, standard_challengers,
    ConstancyReport, ConvergenceRow, DominanceReport,
};
use insurer_control_core::grid::left_endpoints;
use insurer_control_core::model::{log_objective_f, technical_condition_margin};
use insurer_control_core::sde::{simulate, simulate_panel};
use insurer_control_core::solvers::{kernels_unchecked, log_point, solve, OptimalControls, SolveOptions, StrategySolution};
use insurer_control_core::stats::MCEstimate;
use insurer_control_core::{DollarControl, FractionalControl, GridFn, Model, PathSet, Policy, SimConfig, UtilitySpec};
use serde::Serialize;

use crate::config::{ControlConfig, RunConfig, SweepParameter};
use crate::report::{fmt_f64, to_json, Table};
use crate::{LabError, Rayon};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Evaluate,
    Oracle,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Evaluate => "evaluate",
            Command::Oracle => "oracle",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub clamp_zero: bool,
}

/// A JSON report plus any CSV tables, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub name: &'static str,
    pub json: String,
    /// `(file name, contents)`
    pub tables: Vec<(String, String)>,
    /// Verdict of `verify`.
    pub pass: Option<bool>,
}

pub fn execute(command: Command, config: &RunConfig, opts: &RunOptions) -> Result<CommandOutput, LabError> {
    let (json, tables, pass) = match command {
        Command::Solve => (to_json(&solve_report(config, opts)?)?, Vec::new(), None),
        Command::Simulate => {
            let (report, table) = simulate_report(config, opts)?;
            (to_json(&report)?, vec![("paths.csv".to_string(), table.to_csv()?)], None)
        }
        Command::Evaluate => (to_json(&evaluate_report(config, opts)?)?, Vec::new(), None),
        Command::Oracle => {
            let (report, surfaces) = oracle_report(config)?;
            let tables = surfaces.into_iter().map(|(n, t)| t.to_csv().map(|c| (n, c))).collect::<Result<_, _>>()?;
            (to_json(&report)?, tables, None)
        }
        Command::Verify => {
            let report = verify_report(config, opts)?;
            let pass = report.verdict == "PASS";
            (to_json(&report)?, Vec::new(), Some(pass))
        }
        Command::Sweep => {
            let (report, table) = sweep_report(config, opts)?;
            (to_json(&report)?, vec![("sweep.csv".to_string(), table.to_csv()?)], None)
        }
    };
    Ok(CommandOutput { name: command.name(), json, tables, pass })
}

fn solve_options(config: &RunConfig, opts: &RunOptions) -> SolveOptions {
    SolveOptions { clamp_zero: opts.clamp_zero || config.clamp_zero, ..SolveOptions::default() }
}

fn solve_for(config: &RunConfig, opts: &RunOptions, model: &Model, n_points: usize) -> Result<StrategySolution, LabError> {
    Ok(solve(model, config.utility.spec()?, config.x0(), n_points, &solve_options(config, opts))?)
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginRow {
    pub t: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ControlRow {
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_tilde: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub liabilities: Option<f64>,
    /// Quadratic utility: `Φ(t)`, the liabilities per unit feedback loading.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_loading: Option<f64>,
    /// Quadratic utility: `(1/α) e^{-∫_t^T r} P_t/P_T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loading: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadraticSummary {
    pub alpha: f64,
    pub x0: f64,
    pub z0: f64,
    pub p_horizon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub foc_residual_max: f64,
    pub kernel_residual_max: f64,
    pub iterations: Vec<u32>,
    pub clamped: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub utility: String,
    pub alpha: Option<f64>,
    pub non_optimal: bool,
    pub condition_margins: Vec<MarginRow>,
    pub min_condition_margin: f64,
    pub controls: Vec<ControlRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticSummary>,
    pub diagnostics: SolveDiagnostics,
}

fn control_rows(s: &StrategySolution) -> Vec<ControlRow> {
    s.times
        .iter()
        .enumerate()
        .map(|(i, &t)| match &s.controls {
            OptimalControls::Fractional(u) => {
                ControlRow { t, pi: Some(u.pi.cell(i)), kappa: Some(u.kappa.cell(i)), ..Default::default() }
            }
            OptimalControls::Dollar(u) => ControlRow {
                t,
                pi_tilde: Some(u.pi_tilde.cell(i)),
                liabilities: Some(u.liabilities.cell(i)),
                ..Default::default()
            },
            OptimalControls::QuadraticFeedback(q) => ControlRow {
                t,
                phi: Some(q.phi.at(t, q.horizon)),
                pi_loading: Some(q.pi_loading.at(t, q.horizon)),
                loading: Some(q.loading(t)),
                ..Default::default()
            },
        })
        .collect()
}

pub fn solve_report(config: &RunConfig, opts: &RunOptions) -> Result<SolveReport, LabError> {
    let model = config.model()?;
    let n_points = config.solve.n_points.unwrap_or(model.market.n_grid());
    let s = solve_for(config, opts, &model, n_points)?;
    let margin = technical_condition_margin(&model.market, &model.risk);
    let cells = left_endpoints(model.market.n_grid(), model.horizon());
    Ok(SolveReport {
        utility: s.utility.name().to_string(),
        alpha: s.utility.alpha(),
        non_optimal: s.diagnostics.non_optimal,
        condition_margins: cells.iter().zip(margin.values.values()).map(|(&t, &m)| MarginRow { t, margin: m }).collect(),
        min_condition_margin: margin.min,
        controls: control_rows(&s),
        quadratic: s.quadratic().map(|q| QuadraticSummary { alpha: q.alpha, x0: q.x0, z0: q.z0, p_horizon: q.p_horizon }),
        diagnostics: SolveDiagnostics {
            foc_residual_max: s.diagnostics.foc_residual_max,
            kernel_residual_max: kernels_unchecked(&s).max_residual(),
            iterations: s.diagnostics.iterations.clone(),
            clamped: s.diagnostics.clamped.clone(),
        },
    })
}

/// The optimum solved on the simulation grid.
fn optimum_on_steps(config: &RunConfig, opts: &RunOptions, model: &Model, sim: &SimConfig) -> Result<StrategySolution, LabError> {
    solve_for(config, opts, model, sim.n_steps)
}

fn configured_policy(config: &RunConfig, opts: &RunOptions, model: &Model, sim: &SimConfig) -> Result<(String, Policy), LabError> {
    match config.control.as_ref().unwrap_or(&ControlConfig::Optimal) {
        ControlConfig::Optimal => Ok(("optimal".into(), optimal_policy(&optimum_on_steps(config, opts, model, sim)?))),
        ControlConfig::Fractional { pi, kappa } => {
            if pi.is_empty() || kappa.is_empty() {
                return Err(LabError::Config("control arrays must be nonempty".into()));
            }
            Ok(("fractional".into(), Policy::Fractional(FractionalControl { pi: GridFn::new(pi.clone()), kappa: GridFn::new(kappa.clone()) })))
        }
        ControlConfig::Dollar { pi_tilde, liabilities } => {
            if pi_tilde.is_empty() || liabilities.is_empty() {
                return Err(LabError::Config("control arrays must be nonempty".into()));
            }
            Ok((
                "dollar".into(),
                Policy::Dollar(DollarControl { pi_tilde: GridFn::new(pi_tilde.clone()), liabilities: GridFn::new(liabilities.clone()) }),
            ))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub policy: String,
    pub seed: u64,
    pub x0: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    pub positivity_violations: u64,
}

pub fn simulate_report(config: &RunConfig, opts: &RunOptions) -> Result<(SimulateReport, Table), LabError> {
    let model = config.model()?;
    let sim = config.sim_config(opts.seed)?;
    let (name, policy) = configured_policy(config, opts, &model, &sim)?;
    let set = simulate(&policy, &model, &sim, false, &Rayon)?;
    let summary = set.summary(config.z_value()?);
    let quadratic = matches!(policy, Policy::QuadraticFeedback { .. });
    let mut table = Table::new(if quadratic { vec!["path_id", "X_T", "jumps", "Z_T"] } else { vec!["path_id", "X_T", "jumps"] });
    for (i, o) in set.outcomes.iter().enumerate() {
        let mut row = vec![i.to_string(), fmt_f64(o.terminal), o.jumps.to_string()];
        if let Some(z) = o.z_terminal {
            row.push(fmt_f64(z));
        }
        table.push(row);
    }
    let report = SimulateReport {
        policy: name,
        seed: sim.seed,
        x0: sim.x0,
        n_steps: sim.n_steps,
        n_paths: sim.n_paths,
        mean: summary.mean,
        stderr: summary.stderr,
        min: summary.min,
        max: summary.max,
        positivity_violations: summary.positivity_violations,
    };
    Ok((report, table))
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub z: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl From<MCEstimate> for Estimate {
    fn from(e: MCEstimate) -> Self {
        Self { mean: e.mean, stderr: e.stderr, n: e.n, z: e.z, ci_low: e.ci_low, ci_high: e.ci_high }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedEstimate {
    pub name: String,
    pub expected_utility: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateReport {
    pub utility: String,
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub estimates: Vec<NamedEstimate>,
    /// Log utility: `ln x0 + ∫ f(π*, κ*) dt`, the exact value at the optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_optimum: Option<f64>,
}

struct Panel {
    model: Model,
    sim: SimConfig,
    solution: StrategySolution,
    names: Vec<String>,
    sets: Vec<PathSet>,
}

/// Solves, then simulates the optimum and the standard challenger panel on
/// common noise. The optimum comes first.
fn panel(config: &RunConfig, opts: &RunOptions) -> Result<Panel, LabError> {
    let model = config.model()?;
    let sim = config.sim_config(opts.seed)?;
    let s = optimum_on_steps(config, opts, &model, &sim)?;
    let challengers = standard_challengers(&s);
    let mut names = vec!["optimal".to_string()];
    names.extend(challengers.iter().map(|c| c.name.clone()));
    let mut policies = vec![optimal_policy(&s)];
    policies.extend(challengers.into_iter().map(|c| c.policy));
    let sets = simulate_panel(&policies, &model, &sim, &Rayon)?;
    Ok(Panel { model, sim, solution: s, names, sets })
}

pub fn evaluate_report(config: &RunConfig, opts: &RunOptions) -> Result<EvaluateReport, LabError> {
    let z = config.z_value()?;
    let Panel { model, sim, solution: s, names, sets } = panel(config, opts)?;
    let estimates = names
        .into_iter()
        .zip(&sets)
        .map(|(name, set)| Ok(NamedEstimate { name, expected_utility: estimate_expected_utility(set, &s.utility, z)?.into() }))
        .collect::<Result<Vec<_>, LabError>>()?;
    let closed_form_optimum = match (&s.utility, s.fractional()) {
        (UtilitySpec::Log, Some(u)) => log_objective_integral(u, &model).ok().map(|i| sim.x0.ln() + i),
        _ => None,
    };
    Ok(EvaluateReport {
        utility: s.utility.name().to_string(),
        seed: sim.seed,
        n_paths: sim.n_paths,
        n_steps: sim.n_steps,
        estimates,
        closed_form_optimum,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub t: f64,
    pub pi_hat: f64,
    pub kappa_hat: f64,
    pub value: f64,
    pub spacing: f64,
    pub refinement_depth: u32,
    pub evaluations: u64,
    pub pi_star: f64,
    pub kappa_star: f64,
    pub value_star: f64,
    /// `max(|π̂ - π*|, |κ̂ - κ*|)`
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub objective: &'static str,
    pub pi_range: [f64; 2],
    pub kappa_range: [f64; 2],
    pub cells: Vec<OracleRow>,
    pub max_distance: f64,
}

pub fn oracle_report(config: &RunConfig) -> Result<(OracleReport, Vec<(String, Table)>), LabError> {
    let model = config.model()?;
    let spec = config.oracle.spec(&model.risk);
    let n = model.market.n_grid();
    let times = left_endpoints(n, model.horizon());
    let mut cells = Vec::with_capacity(n);
    let mut surfaces = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let c = model.market.point(j);
        let res = grid_oracle_log(&c, &model.risk, &spec, &Rayon)?;
        let (pi_star, kappa_star) = log_point(&c, &model.risk);
        let value_star = log_objective_f(pi_star, kappa_star, &c, &model.risk).unwrap_or(f64::NAN);
        cells.push(OracleRow {
            t,
            pi_hat: res.pi,
            kappa_hat: res.kappa,
            value: res.value,
            spacing: res.spacing,
            refinement_depth: res.refinement_depth,
            evaluations: res.evaluations,
            pi_star,
            kappa_star,
            value_star,
            distance: (res.pi - pi_star).abs().max((res.kappa - kappa_star).abs()),
        });
        if let Some(h) = config.oracle.surface_spacing {
            let mut table = Table::new(vec!["pi", "kappa", "f"]);
            for [p, k, f] in log_objective_surface(&c, &model.risk, spec.pi_range, spec.kappa_range, h) {
                table.push(vec![fmt_f64(p), fmt_f64(k), fmt_f64(f)]);
            }
            let name = if n == 1 { "oracle_surface.csv".to_string() } else { format!("oracle_surface_{j}.csv") };
            surfaces.push((name, table));
        }
    }
    let max_distance = cells.iter().map(|c| c.distance).fold(0.0, f64::max);
    Ok((
        OracleReport {
            objective: "log",
            pi_range: [spec.pi_range.0, spec.pi_range.1],
            kappa_range: [spec.kappa_range.0, spec.kappa_range.1],
            cells,
            max_distance,
        },
        surfaces,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceRow {
    pub name: String,
    pub expected_utility: Estimate,
    pub delta: f64,
    pub paired_stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceSection {
    pub optimal: Estimate,
    pub challengers: Vec<DominanceRow>,
    pub pass: bool,
}

impl From<DominanceReport> for DominanceSection {
    fn from(r: DominanceReport) -> Self {
        Self {
            optimal: r.optimal.into(),
            challengers: r
                .entries
                .into_iter()
                .map(|e| DominanceRow { name: e.name, expected_utility: e.value.into(), delta: e.delta, paired_stderr: e.paired_stderr, pass: e.pass })
                .collect(),
            pass: r.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyRow {
    pub name: String,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyPairRow {
    pub first: String,
    pub second: String,
    pub difference: f64,
    pub combined_stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancySection {
    pub entries: Vec<ConstancyRow>,
    pub pairs: Vec<ConstancyPairRow>,
    pub pass: bool,
}

impl From<ConstancyReport> for ConstancySection {
    fn from(r: ConstancyReport) -> Self {
        let name = |i: usize| r.entries[i].name.clone();
        Self {
            pairs: r
                .pairs
                .iter()
                .map(|p| ConstancyPairRow {
                    first: name(p.first),
                    second: name(p.second),
                    difference: p.difference,
                    combined_stderr: p.combined_stderr,
                    pass: p.pass,
                })
                .collect(),
            entries: r.entries.iter().map(|e| ConstancyRow { name: e.name.clone(), estimate: e.estimate.into() }).collect(),
            pass: r.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub n_steps: usize,
    pub dt: f64,
    pub error: f64,
    pub stderr: f64,
    pub order: Option<f64>,
}

impl From<ConvergenceRow> for LadderRow {
    fn from(r: ConvergenceRow) -> Self {
        Self { n_steps: r.n_steps, dt: r.dt, error: r.error, stderr: r.stderr, order: r.order }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderSection {
    /// `quadratic_identity` or `euler_vs_exact`.
    pub metric: &'static str,
    pub n_paths: usize,
    pub rows: Vec<LadderRow>,
    pub monotone: bool,
    pub finest_over_coarsest: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub utility: String,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub x0: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub non_optimal: bool,
    pub foc_residual_max: f64,
    pub kernel_residual_max: f64,
    pub dominance: DominanceSection,
    pub constancy: ConstancySection,
    /// Fractional controls only: nonpositive wealth values over all paths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity_violations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<LadderSection>,
    pub verdict: &'static str,
}

pub fn verify_report(config: &RunConfig, opts: &RunOptions) -> Result<VerifyReport, LabError> {
    let z = config.z_value()?;
    let Panel { model, sim, solution: s, names, sets } = panel(config, opts)?;
    let kernel_residual_max = kernels_unchecked(&s).max_residual();
    let others: Vec<(&str, &PathSet)> = names[1..].iter().map(String::as_str).zip(&sets[1..]).collect();
    let dominance = dominance_from_paths(&s.utility, &sets[0], &others, z)?;
    let all: Vec<(&str, &PathSet)> = names.iter().map(String::as_str).zip(&sets).collect();
    let constancy = constancy_from_paths(&s.utility, &sets[0], &all, z)?;
    let positivity_violations = s.fractional().map(|_| sets[0].positivity_violations());

    let convergence = match &config.verify.ladder {
        None => None,
        Some(ladder) => {
            let n_paths = config.verify.ladder_paths.unwrap_or(sim.n_paths);
            let (metric, rows) = match &s.controls {
                OptimalControls::QuadraticFeedback(q) => {
                    ("quadratic_identity", quadratic_identity_study(q, &model, ladder, n_paths, sim.seed, &Rayon)?)
                }
                OptimalControls::Fractional(u) => {
                    ("euler_vs_exact", euler_vs_exact_study(u, &model, sim.x0, ladder, n_paths, sim.seed, &Rayon)?)
                }
                OptimalControls::Dollar(_) => {
                    return Err(LabError::Config("no discretisation study for dollar controls".into()));
                }
            };
            let monotone = rows.windows(2).all(|w| w[1].error < w[0].error);
            let finest_over_coarsest = rows[rows.len() - 1].error / rows[0].error;
            Some(LadderSection { metric, n_paths, rows: rows.into_iter().map(Into::into).collect(), monotone, finest_over_coarsest })
        }
    };

    let pass = !s.diagnostics.non_optimal
        && s.diagnostics.foc_residual_max < insurer_control_core::solvers::RESIDUAL_TOLERANCE
        && kernel_residual_max < insurer_control_core::solvers::RESIDUAL_TOLERANCE
        && dominance.pass
        && constancy.pass
        && positivity_violations.is_none_or(|v| v == 0)
        && convergence.as_ref().is_none_or(|c| c.monotone);
    Ok(VerifyReport {
        utility: s.utility.name().to_string(),
        alpha: s.utility.alpha(),
        seed: sim.seed,
        x0: sim.x0,
        n_steps: sim.n_steps,
        n_paths: sim.n_paths,
        non_optimal: s.diagnostics.non_optimal,
        foc_residual_max: s.diagnostics.foc_residual_max,
        kernel_residual_max,
        dominance: dominance.into(),
        constancy: constancy.into(),
        positivity_violations,
        convergence,
        verdict: if pass { "PASS" } else { "FAIL" },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub pi_star: f64,
    pub kappa_star_or_l: f64,
    pub condition_margin: f64,
    pub non_optimal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub parameter: &'static str,
    pub utility: String,
    pub rows: Vec<SweepRow>,
}

fn set_parameter(config: &mut RunConfig, p: SweepParameter, v: f64) -> Result<(), LabError> {
    use crate::config::Series;
    match p {
        SweepParameter::R => config.market.r = Series::Scalar(v),
        SweepParameter::Mu => config.market.mu = Series::Scalar(v),
        SweepParameter::Sigma => config.market.sigma = Series::Scalar(v),
        SweepParameter::P => config.risk.p = v,
        SweepParameter::A => config.risk.a = v,
        SweepParameter::B => config.risk.b = v,
        SweepParameter::Gamma => config.risk.gamma = v,
        SweepParameter::Lambda => config.risk.lambda = v,
        SweepParameter::Rho => config.risk.rho = v,
        SweepParameter::Alpha => {
            if config.utility.kind == crate::config::UtilityKind::Log {
                return Err(LabError::Config("log utility has no alpha to sweep".into()));
            }
            config.utility.alpha = Some(v);
        }
    }
    Ok(())
}

/// Re-solves at each value of one parameter and tabulates the controls at
/// `t = 0`.
pub fn sweep_report(config: &RunConfig, opts: &RunOptions) -> Result<(SweepReport, Table), LabError> {
    let sweep = config.sweep.as_ref().ok_or_else(|| LabError::Config("missing `sweep` section".into()))?;
    let mut rows = Vec::new();
    let mut table = Table::new(vec!["param", "pi_star", "kappa_star_or_L", "condition_margin"]);
    for v in sweep.points()? {
        let mut c = config.clone();
        set_parameter(&mut c, sweep.parameter, v)?;
        let model = c.model()?;
        let s = solve_for(&c, opts, &model, model.market.n_grid())?;
        let (pi, second) = match &s.controls {
            OptimalControls::Fractional(u) => (u.pi.cell(0), u.kappa.cell(0)),
            OptimalControls::Dollar(u) => (u.pi_tilde.cell(0), u.liabilities.cell(0)),
            OptimalControls::QuadraticFeedback(q) => q.feedback(0.0, q.z0),
        };
        let margin = s.diagnostics.condition_margins[0];
        table.push(vec![fmt_f64(v), fmt_f64(pi), fmt_f64(second), fmt_f64(margin)]);
        rows.push(SweepRow { value: v, pi_star: pi, kappa_star_or_l: second, condition_margin: margin, non_optimal: s.diagnostics.non_optimal });
    }
    let utility = config.utility.spec()?.name().to_string();
    Ok((SweepReport { parameter: sweep.parameter.name(), utility, rows }, table))
}
