use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gibc_lab::{parse_config, run_experiment, ExperimentKind, LabError, RunSettings};

#[derive(Parser)]
#[command(
    name = "gibc-lab",
    version,
    about = "Runs convergence and consistency experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-domain model error rates, energy bound and stepper order.
    TimeConvergence(RunArgs),
    /// Frequency-domain rates, low/high-frequency behaviour and FD order.
    FreqConvergence(RunArgs),
    /// Synthesized vs time-stepped traces and the Parseval identity.
    CrossValidate(RunArgs),
    /// Boundary-layer profiles, residual support and corrector diagnostics.
    LayerDiagnostics(RunArgs),
    /// Boundary operator positivity, kernel symbol and CQ transfer function.
    KernelChecks(RunArgs),
    /// Parseval identity between time and frequency error norms.
    Parseval(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::TimeConvergence(a) => (ExperimentKind::TimeConvergence, a),
            Command::FreqConvergence(a) => (ExperimentKind::FreqConvergence, a),
            Command::CrossValidate(a) => (ExperimentKind::CrossValidate, a),
            Command::LayerDiagnostics(a) => (ExperimentKind::LayerDiagnostics, a),
            Command::KernelChecks(a) => (ExperimentKind::KernelChecks, a),
            Command::Parseval(a) => (ExperimentKind::Parseval, a),
        }
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<bool, LabError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| LabError::Validation(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = parse_config(&text)?;
    if config.kind != kind {
        return Err(LabError::Validation(format!(
            "config describes a {} experiment but `{kind}` was requested",
            config.kind
        )));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let settings = RunSettings {
        out_dir: Some(args.out),
        jobs: args.jobs,
    };
    let report = run_experiment(&config, &settings)?;
    for check in &report.checks {
        println!(
            "{} {}: {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    let (kind, args) = cli.command.split();
    match run(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
