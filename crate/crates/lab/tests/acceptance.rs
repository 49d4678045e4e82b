//! End-to-end acceptance checks. Prints one `criterion N ... PASS|FAIL` line
//! per check and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::{Duration, Instant};

use insurer_control_core::evaluation::{grid_oracle_log, quadratic_identity_study, OracleSpec};
use insurer_control_core::model::{MarketCoefficients, Model, RiskParams};
use insurer_control_core::sde::simulate_fractional;
use insurer_control_core::solvers::{
    compute_kernels, exponential_root_function, log_point, power_root_function, solve, solve_power, SolveOptions,
};
use insurer_control_core::{SimConfig, UtilitySpec};
use insurer_control_lab::{execute, Command, Rayon, RunConfig, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn reference() -> Model {
    Model::new(
        MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
        RiskParams { p: 0.2, a: 0.1, b: 0.15, gamma: 0.3, lambda: 0.2, rho: -0.2 },
    )
}

/// Parameter sets satisfying the technical condition, drawn from a fixed seed.
fn random_models(n: usize, seed: u64) -> Vec<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r = rng.random_range(0.0..0.05);
        let sigma = rng.random_range(0.15..0.4);
        let mu = r + rng.random_range(0.02..0.1);
        let a = rng.random_range(0.02..0.2);
        let risk = RiskParams {
            p: a + rng.random_range(0.02..0.3),
            a,
            b: rng.random_range(0.05..0.3),
            gamma: rng.random_range(0.15..0.6),
            lambda: rng.random_range(0.05..0.6),
            rho: rng.random_range(-0.9..0.0),
        };
        let m = Model::new(MarketCoefficients::constant(r, mu, sigma, 1.0), risk);
        if m.technical_condition().holds() {
            out.push(m);
        }
    }
    out
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: u32, title: &str, elapsed: Duration, o: &Outcome) -> bool {
    println!(
        "criterion {n} {title}: {} ({}; {:.1} s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    o.pass
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for m in random_models(50, 1) {
        let c = m.market.point(0);
        let (pi, kappa) = log_point(&c, &m.risk);
        // ρ ≤ 0 and κ < 1/γ bound π* a priori
        let merton = c.excess() / (c.sigma * c.sigma);
        let lower = merton + m.risk.rho * m.risk.b / (m.risk.gamma * c.sigma);
        let spec = OracleSpec { pi_range: (lower.min(0.0), merton.max(3.0)), ..OracleSpec::standard(&m.risk) };
        let res = grid_oracle_log(&c, &m.risk, &spec, &Rayon).expect("oracle");
        worst = worst.max((res.pi - pi).abs()).max((res.kappa - kappa).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome { pass: worst <= 1e-5 && secs < 60.0, detail: format!("max distance {worst:.3e} <= 1e-5, {secs:.1} s < 60 s") }
}

fn utilities(alpha: f64) -> [UtilitySpec; 5] {
    [
        UtilitySpec::Log,
        UtilitySpec::Power { alpha },
        UtilitySpec::PowerNegative { alpha: -3.0 * alpha, c: 0.0 },
        UtilitySpec::Exponential { alpha: 2.0 * alpha },
        UtilitySpec::Quadratic { alpha: 0.5 * alpha },
    ]
}

fn residuals() -> Outcome {
    let start = Instant::now();
    let mut worst_foc = 0.0f64;
    let mut worst_kernel = 0.0f64;
    let mut failures = 0;
    for (i, m) in random_models(200, 2).iter().enumerate() {
        let alpha = 0.1 + 0.8 * (i as f64 + 0.5) / 200.0;
        for u in utilities(alpha) {
            match solve(m, u, 1.0, 4, &SolveOptions::default()).and_then(|s| compute_kernels(&s).map(|k| (s, k))) {
                Ok((s, k)) => {
                    worst_foc = worst_foc.max(s.diagnostics.foc_residual_max);
                    worst_kernel = worst_kernel.max(k.max_residual());
                }
                Err(_) => failures += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: failures == 0 && worst_foc < 1e-10 && worst_kernel < 1e-10 && secs < 5.0,
        detail: format!("max FOC {worst_foc:.3e}, max kernel {worst_kernel:.3e}, {failures} solver errors, {secs:.2} s < 5 s"),
    }
}

fn root_brackets() -> Outcome {
    const N: usize = 10_000;
    let mut bad_power = 0;
    let mut bad_exp = 0;
    for (i, m) in random_models(200, 2).iter().enumerate() {
        let c = m.market.point(0);
        let alpha = 0.1 + 0.8 * (i as f64 + 0.5) / 200.0;
        for a in [alpha, -3.0 * alpha] {
            let h = power_root_function(a, &c, &m.risk);
            // grid k/N with the endpoint limits; h(0+) = +inf because a < 1
            let grid: Vec<f64> = (0..=N).map(|k| k as f64 / N as f64).collect();
            let vals: Vec<f64> = grid.iter().map(|&x| if x == 0.0 { f64::INFINITY } else { h.eval(x) }).collect();
            let brackets: Vec<usize> = (0..N).filter(|&k| (vals[k] > 0.0) != (vals[k + 1] > 0.0)).collect();
            let phi = solve_power(m, a, 1, &SolveOptions::default())
                .map(|s| s.diagnostics.root_values[0])
                .unwrap_or(f64::NAN);
            let inside = brackets.len() == 1 && grid[brackets[0]] < phi && phi <= grid[brackets[0] + 1];
            if !inside {
                bad_power += 1;
            }
        }
        let h = exponential_root_function(2.0 * alpha, m.market.growth_to_horizon(0.0), &c, &m.risk);
        let vals: Vec<f64> = (0..N).map(|k| h.eval(k as f64 * 1e-3)).collect();
        if !(h.eval(0.0) < 0.0 && vals.windows(2).all(|w| w[1] > w[0])) {
            bad_exp += 1;
        }
    }
    Outcome {
        pass: bad_power == 0 && bad_exp == 0,
        detail: format!("{bad_power} power scans without exactly one sign change around the solved root, {bad_exp} non-monotone h~"),
    }
}

struct VerifyRun {
    utility: &'static str,
    report: serde_json::Value,
    elapsed: Duration,
}

fn verify_runs() -> Vec<VerifyRun> {
    ["log", "power", "exponential", "quadratic"]
        .into_iter()
        .map(|u| {
            let config = RunConfig::load(&config_path(&format!("reference_{u}.json"))).expect("config");
            let start = Instant::now();
            let out = execute(Command::Verify, &config, &RunOptions::default()).expect("verify");
            VerifyRun { utility: u, report: serde_json::from_str(&out.json).unwrap(), elapsed: start.elapsed() }
        })
        .collect()
}

fn dominance(runs: &[VerifyRun]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        let d = &run.report["dominance"];
        let ok = d["pass"].as_bool().unwrap() && run.elapsed < Duration::from_secs(120);
        let worst = d["challengers"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["delta"].as_f64().unwrap() / c["paired_stderr"].as_f64().unwrap())
            .fold(f64::INFINITY, f64::min);
        pass &= ok;
        parts.push(format!("{} min dJ/se {worst:.2} in {:.1} s", run.utility, run.elapsed.as_secs_f64()));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn constancy(runs: &[VerifyRun]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        let c = &run.report["constancy"];
        let worst = c["pairs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["difference"].as_f64().unwrap().abs() / p["combined_stderr"].as_f64().unwrap())
            .fold(0.0, f64::max);
        pass &= c["pass"].as_bool().unwrap();
        if run.utility == "log" {
            let first = &c["entries"][0];
            let exact = first["name"] == "optimal" && first["estimate"]["mean"].as_f64() == Some(1.0);
            pass &= exact;
            parts.push(format!("log u* entry exactly 1: {exact}"));
        }
        parts.push(format!("{} max |diff|/se {worst:.2}", run.utility));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn positivity() -> Outcome {
    let m = reference();
    let s = solve(&m, UtilitySpec::Log, 1.0, 256, &SolveOptions::default()).unwrap();
    let config = SimConfig { x0: 1.0, n_steps: 256, n_paths: 1_000_000, seed: SEED };
    let paths = simulate_fractional(s.fractional().unwrap(), &m, &config, &Rayon).unwrap();
    let v = paths.positivity_violations();
    Outcome { pass: v == 0, detail: format!("{v} nonpositive values over {} paths", config.n_paths) }
}

fn quadratic_identity() -> Outcome {
    let start = Instant::now();
    let m = reference();
    let s = solve(&m, UtilitySpec::Quadratic { alpha: 0.5 }, 1.0, 1, &SolveOptions::default()).unwrap();
    let ladder = [64, 128, 256, 512, 1024];
    let rows = quadratic_identity_study(s.quadratic().unwrap(), &m, &ladder, 100_000, SEED, &Rayon).unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let ratio = errors[errors.len() - 1] / errors[0];
    let secs = start.elapsed().as_secs_f64();
    let listed: Vec<String> = errors.iter().map(|e| format!("{e:.4e}")).collect();
    Outcome {
        pass: monotone && ratio < 0.25 && secs < 120.0,
        detail: format!("errors [{}], monotone {monotone}, finest/coarsest {ratio:.6} < 0.25", listed.join(", ")),
    }
}

fn degenerate_cases() -> Outcome {
    let mut checks = Vec::new();
    let clamp = SolveOptions { clamp_zero: true, ..SolveOptions::default() };

    // (a) ρ = 0
    let mut m = reference();
    m.risk.rho = 0.0;
    let c = m.market.point(0);
    let merton = c.excess() / (c.sigma * c.sigma);
    let s = solve(&m, UtilitySpec::Log, 1.0, 1, &SolveOptions::default()).unwrap();
    checks.push(("log pi* = (mu-r)/sigma^2", (s.fractional().unwrap().pi.cell(0) - merton).abs() < 1e-14));

    // (b) C₃ = λγ: p - a = 0.125 = λγ
    let boundary = Model::new(
        MarketCoefficients::constant(0.02, 0.08, 0.2, 1.0),
        RiskParams { p: 0.625, a: 0.5, b: 0.15, gamma: 0.25, lambda: 0.5, rho: 0.0 },
    );
    let alpha = 0.5;
    let s = solve(&boundary, UtilitySpec::Power { alpha }, 1.0, 1, &clamp).unwrap();
    let u = s.fractional().unwrap();
    checks.push(("power kappa* = 0", u.kappa.cell(0) == 0.0));
    checks.push(("power phi = 1", s.diagnostics.root_values[0] == 1.0));
    checks.push(("power pi* = (mu-r)/((1-a)sigma^2)", (u.pi.cell(0) - merton / (1.0 - alpha)).abs() < 1e-14));
    let s = solve(&boundary, UtilitySpec::Exponential { alpha: 1.0 }, 1.0, 4, &clamp).unwrap();
    checks.push(("exponential L* = 0", s.dollar().unwrap().liabilities.values().iter().all(|&l| l == 0.0)));

    // (c) Φ = 0
    let s = solve(&boundary, UtilitySpec::Quadratic { alpha: 0.5 }, 1.0, 8, &SolveOptions::default()).unwrap();
    let q = s.quadratic().unwrap();
    checks.push(("quadratic L* = 0", s.times.iter().all(|&t| q.feedback(t, 0.37).1 == 0.0)));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() { format!("{} checks", checks.len()) } else { format!("failed: {}", failed.join("; ")) },
    }
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_insurer-control-lab");
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["reference_log.json", "quadratic_ladder.json"] {
        let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
        let mut stdout = Vec::new();
        for (dir, threads) in dirs.iter().zip(["1", "4"]) {
            let out = Process::new(bin)
                .args(["verify", "--config"])
                .arg(config_path(name))
                .arg("--out")
                .arg(dir.path())
                .args(["--threads", threads])
                .output()
                .expect("run binary");
            stdout.push(out.stdout);
        }
        let a = std::fs::read(dirs[0].path().join("verify.json")).unwrap_or_default();
        let b = std::fs::read(dirs[1].path().join("verify.json")).unwrap_or_default();
        let same = !a.is_empty() && a == b && stdout[0] == stdout[1];
        pass &= same;
        parts.push(format!("{name}: {}", if same { "identical" } else { "differs" }));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn main() {
    let mut all = true;
    let mut run = |n: u32, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= report(n, title, start.elapsed(), &o);
    };
    run(1, "oracle equivalence (log)", &mut oracle_equivalence);
    run(2, "first-order and kernel residuals", &mut residuals);
    run(3, "root uniqueness brackets", &mut root_brackets);
    let runs = verify_runs();
    run(4, "dominance", &mut || dominance(&runs));
    run(5, "constancy", &mut || constancy(&runs));
    run(6, "positivity", &mut positivity);
    run(7, "quadratic pathwise identity", &mut quadratic_identity);
    run(8, "degenerate cases", &mut degenerate_cases);
    run(9, "determinism across thread counts", &mut determinism);
    if !all {
        std::process::exit(1);
    }
}
