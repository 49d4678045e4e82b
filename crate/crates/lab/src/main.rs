use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use insurer_control_lab::{execute, with_threads, write_outputs, Command, RunConfig, RunOptions, EXIT_VERIFICATION_FAILED};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    Solve,
    Simulate,
    Evaluate,
    Oracle,
    Verify,
    Sweep,
}

impl From<Subcommand> for Command {
    fn from(s: Subcommand) -> Self {
        match s {
            Subcommand::Solve => Command::Solve,
            Subcommand::Simulate => Command::Simulate,
            Subcommand::Evaluate => Command::Evaluate,
            Subcommand::Oracle => Command::Oracle,
            Subcommand::Verify => Command::Verify,
            Subcommand::Sweep => Command::Sweep,
        }
    }
}

/// Optimal investment and risk control experiments for an insurer.
#[derive(Debug, Parser)]
#[command(name = "insurer-control-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for reports and tables.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Replace the optimum by zero debt where the technical condition fails.
    #[arg(long)]
    clamp_zero: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::load(&cli.config).and_then(|config| {
        let opts = RunOptions { seed: cli.seed, clamp_zero: cli.clamp_zero };
        with_threads(cli.threads, || execute(cli.command.into(), &config, &opts))?
    });
    let output = match result.and_then(|o| write_outputs(&cli.out, &o).map(|_| o)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    print!("{}", output.json);
    match output.pass {
        Some(false) => {
            eprintln!("verification FAILED");
            ExitCode::from(EXIT_VERIFICATION_FAILED as u8)
        }
        _ => ExitCode::SUCCESS,
    }
}
