use insurer_control_core::evaluation::{
    dominance_test, estimate_expected_utility, euler_vs_exact_study, log_objective_integral, Challenger,
};
use insurer_control_core::model::{MarketCoefficients, Model, RiskParams};
use insurer_control_core::noise::{generate_noise, NoiseSpec};
use insurer_control_core::sde::{simulate, simulate_fractional, simulate_panel, simulate_quadratic_feedback};
use insurer_control_core::solvers::{solve, SolveOptions};
use insurer_control_core::stats::{MCEstimate, Z_99};
use insurer_control_core::*;

fn reference() -> Model {
    Model::new(
        MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
        RiskParams { p: 0.2, a: 0.1, b: 0.15, gamma: 0.3, lambda: 0.2, rho: -0.2 },
    )
}

fn log_optimum(m: &Model, n_points: usize) -> FractionalControl {
    solve(m, UtilitySpec::Log, 1.0, n_points, &SolveOptions::default()).unwrap().fractional().unwrap().clone()
}

/// Evaluates tasks back to front, to show results do not depend on order.
struct Reversed;

impl Executor for Reversed {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut out: Vec<(usize, T)> = (0..n).rev().map(|i| (i, f(i))).collect();
        out.reverse();
        out.into_iter().map(|(_, t)| t).collect()
    }
}

#[test]
fn brownian_and_poisson_moments() {
    let spec = NoiseSpec { seed: 2024, n_steps: 1000, dt: 1e-3, lambda: 3.0 };
    let noise = generate_noise(&spec, 1000, &Sequential);
    let n = 1_000_000f64;
    let (mut s1, mut s2, mut q1, mut jumps) = (0.0, 0.0, 0.0, 0u64);
    for p in &noise.paths {
        for s in &p.steps {
            s1 += s.dw1;
            q1 += s.dw1 * s.dw1;
            s2 += s.dw2;
            jumps += s.dn as u64;
        }
    }
    let bound = 3.0 * (spec.dt / n).sqrt();
    assert!((s1 / n).abs() < bound && (s2 / n).abs() < bound);
    assert!(((q1 / n) / spec.dt - 1.0).abs() < 0.01);
    let mean = spec.lambda * spec.dt;
    assert!(((jumps as f64 / n) - mean).abs() < 3.0 * (mean / n).sqrt());
}

#[test]
fn ensembles_do_not_depend_on_evaluation_order() {
    let spec = NoiseSpec { seed: 5, n_steps: 32, dt: 1.0 / 32.0, lambda: 0.7 };
    assert_eq!(generate_noise(&spec, 40, &Sequential), generate_noise(&spec, 40, &Reversed));
    let m = reference();
    let cfg = SimConfig { x0: 1.0, n_steps: 32, n_paths: 200, seed: 5 };
    let u = log_optimum(&m, 1);
    let a = simulate_fractional(&u, &m, &cfg, &Sequential).unwrap();
    let b = simulate_fractional(&u, &m, &cfg, &Reversed).unwrap();
    assert_eq!(a, b);
    let ea = estimate_expected_utility(&a, &UtilitySpec::Log, Z_99).unwrap();
    let mut shuffled = a.clone();
    shuffled.outcomes.reverse();
    let eb = estimate_expected_utility(&shuffled, &UtilitySpec::Log, Z_99).unwrap();
    assert!((ea.mean - eb.mean).abs() < 1e-12 && (ea.stderr - eb.stderr).abs() < 1e-12);
}

#[test]
fn exact_scheme_keeps_wealth_positive_near_the_debt_limit() {
    let m = Model::new(
        MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
        RiskParams { p: 0.2, a: 0.1, b: 0.15, gamma: 0.3, lambda: 5.0, rho: -0.2 },
    );
    let u = FractionalControl::constant(2.0, (1.0 - 1e-6) / 0.3);
    let set = simulate_fractional(&u, &m, &SimConfig { x0: 1.0, n_steps: 64, n_paths: 2000, seed: 8 }, &Sequential).unwrap();
    assert_eq!(set.positivity_violations(), 0);
    assert!(set.outcomes.iter().all(|o| o.terminal > 0.0 && o.min_wealth > 0.0));
    assert!(set.outcomes.iter().any(|o| o.jumps > 0 && o.terminal < 1e-12));
}

#[test]
fn expected_log_wealth_matches_objective_integral() {
    // time-varying coefficients on four cells
    let market = MarketCoefficients {
        horizon: 1.0,
        r: GridFn::new(vec![0.02, 0.025, 0.03, 0.02]),
        mu: GridFn::new(vec![0.08, 0.07, 0.09, 0.1]),
        sigma: GridFn::new(vec![0.2, 0.25, 0.2, 0.3]),
    };
    let m = Model::new(market, reference().risk);
    let u = log_optimum(&m, 4);
    let set = simulate_fractional(&u, &m, &SimConfig { x0: 1.5, n_steps: 64, n_paths: 100_000, seed: 17 }, &Sequential).unwrap();
    let e = estimate_expected_utility(&set, &UtilitySpec::Log, Z_99).unwrap();
    let expect = 1.5f64.ln() + log_objective_integral(&u, &m).unwrap();
    assert!((e.mean - expect).abs() < 3.0 * e.stderr, "{} vs {expect} ± {}", e.mean, e.stderr);
    let jm: Vec<f64> = set.outcomes.iter().map(|o| o.jump_martingale).collect();
    let j = MCEstimate::from_samples(&jm, Z_99);
    assert!(j.mean.abs() < 3.0 * j.stderr, "{} ± {}", j.mean, j.stderr);
}

#[test]
fn merton_limit_has_lognormal_moments() {
    let m = Model::new(
        MarketCoefficients::constant(0.03, 0.09, 0.25, 2.0),
        RiskParams { p: 0.1, a: 0.1, b: 0.0, gamma: 0.3, lambda: 0.0, rho: 0.0 },
    );
    let pi = 0.06 / 0.0625;
    let set = simulate_fractional(&FractionalControl::constant(pi, 0.7), &m, &SimConfig { x0: 1.0, n_steps: 16, n_paths: 100_000, seed: 3 }, &Sequential)
        .unwrap();
    assert!(set.outcomes.iter().all(|o| o.jumps == 0));
    let xs = set.terminal_values();
    let e = MCEstimate::from_samples(&xs, Z_99);
    let drift = 0.03 + 0.06 * pi;
    let mean = (drift * 2.0f64).exp();
    assert!((e.mean - mean).abs() < 3.0 * e.stderr);
    let var = mean * mean * ((0.25 * pi).powi(2) * 2.0).exp_m1();
    let sample_var = e.stderr * e.stderr * xs.len() as f64;
    assert!((sample_var / var - 1.0).abs() < 0.03, "{sample_var} {var}");
}

#[test]
fn paired_differences_beat_independent_ones() {
    let m = reference();
    let u = log_optimum(&m, 1);
    let up = u.scaled(1.1, 1.0);
    let cfg = SimConfig { x0: 1.0, n_steps: 32, n_paths: 20_000, seed: 11 };
    let sets = simulate_panel(&[Policy::Fractional(u.clone()), Policy::Fractional(up.clone())], &m, &cfg, &Sequential).unwrap();
    let log = |s: &PathSet| s.terminal_values().iter().map(|x| x.ln()).collect::<Vec<_>>();
    let (a, b) = (log(&sets[0]), log(&sets[1]));
    let paired: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let indep_b = log(&simulate_fractional(&up, &m, &SimConfig { seed: 12, ..cfg }, &Sequential).unwrap());
    let independent: Vec<f64> = a.iter().zip(&indep_b).map(|(x, y)| x - y).collect();
    let (p, i) = (MCEstimate::from_samples(&paired, Z_99), MCEstimate::from_samples(&independent, Z_99));
    assert!(p.stderr < i.stderr / 10.0, "{} {}", p.stderr, i.stderr);
}

#[test]
fn log_dominance_gaps_match_closed_forms() {
    let m = reference();
    let s = solve(&m, UtilitySpec::Log, 1.0, 1, &SolveOptions::default()).unwrap();
    let u = s.fractional().unwrap().clone();
    let cfg = SimConfig { x0: 1.0, n_steps: 16, n_paths: 100_000, seed: 21 };
    let panel = [
        Challenger::new("zero", Policy::Fractional(FractionalControl::zero())),
        Challenger::new("pi_x1.1", Policy::Fractional(u.scaled(1.1, 1.0))),
    ];
    let r = dominance_test(&s, &panel, &cfg, Z_99, &Sequential).unwrap();
    assert!(r.pass);
    let gap_zero = log_objective_integral(&u, &m).unwrap() - 0.02;
    let z = &r.entries[0];
    assert!((z.delta - gap_zero).abs() < 3.0 * z.paired_stderr, "{} {gap_zero} {}", z.delta, z.paired_stderr);
    let pi = u.pi.cell(0);
    let gap_pi = 0.5 * 0.04 * (0.1 * pi) * (0.1 * pi);
    let p = &r.entries[1];
    assert!((p.delta - gap_pi).abs() < 3.0 * p.paired_stderr, "{} {gap_pi} {}", p.delta, p.paired_stderr);
}

#[test]
fn quadratic_density_without_kernels_is_constant() {
    let m = Model::new(
        MarketCoefficients::constant(0.02, 0.02, 0.2, 1.0),
        RiskParams { p: 0.625, a: 0.5, b: 0.15, gamma: 0.25, lambda: 0.5, rho: 0.0 },
    );
    let s = solve(&m, UtilitySpec::Quadratic { alpha: 0.5 }, 1.0, 1, &SolveOptions::default());
    // μ = r is rejected by validation; build the ingredients directly
    assert!(s.is_err());
    let s = insurer_control_core::solvers::solve_quadratic(&m, 0.5, 1.0, 1, &SolveOptions::default()).unwrap();
    let q = s.quadratic().unwrap();
    assert_eq!(q.phi.cell(0), 0.0);
    let set = simulate_quadratic_feedback(q, &m, &SimConfig { x0: 1.0, n_steps: 32, n_paths: 100, seed: 1 }, &Sequential).unwrap();
    let riskless = (1.0 + 0.02f64 / 32.0).powi(32);
    for o in &set.outcomes {
        assert_eq!(o.z_terminal, Some(q.z0));
        assert!((o.terminal - riskless).abs() < 1e-14);
    }
}

#[test]
fn quadratic_density_stays_positive() {
    let m = reference();
    let s = solve(&m, UtilitySpec::Quadratic { alpha: 0.5 }, 1.0, 1, &SolveOptions::default()).unwrap();
    let cfg = SimConfig { x0: 1.0, n_steps: 64, n_paths: 2000, seed: 4 };
    let set = simulate(&evaluation_policy(&s), &m, &cfg, true, &Sequential).unwrap();
    for d in set.density.as_ref().unwrap() {
        assert!(d.iter().all(|&z| z > 0.0));
    }
}

fn evaluation_policy(s: &solvers::StrategySolution) -> Policy {
    insurer_control_core::evaluation::optimal_policy(s)
}

#[test]
fn euler_strong_error_has_order_one_half() {
    let m = reference();
    let u = log_optimum(&m, 1);
    let rows = euler_vs_exact_study(&u, &m, 1.0, &[64, 128, 256, 512, 1024], 4000, 6, &Sequential).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].error < w[0].error);
    }
    let overall = (rows[0].error / rows[4].error).ln() / 16f64.ln();
    assert!((overall - 0.5).abs() < 0.1, "{overall}");
}
