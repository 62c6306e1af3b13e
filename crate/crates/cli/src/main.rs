use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbm_gbc_cli::config::SEED_ENV;
use rbm_gbc_cli::{list_models, run, CliError, Experiment, ExperimentConfig, RunArgs};

#[derive(Parser)]
#[command(name = "rbm-gbc", version, about = "Boundary local time and Gauss-Bonnet-Chern experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Euler characteristic from the interior and boundary integrands.
    VerifyGbc(RunArgs),
    /// Local-time moment integrals against their closed form.
    Moments(RunArgs),
    /// Integrated heat supertrace, split into interior and boundary parts.
    MckeanSinger(RunArgs),
    /// Supertrace cancellation suite on random derivation tuples.
    Patodi(RunArgs),
    /// Log-log slopes of local-time moments in t.
    Scaling(RunArgs),
    /// Scaled bridge marginal against its limit.
    Bridge(RunArgs),
    /// Both sides of the reflection identity.
    Reflection(RunArgs),
    /// Small-time scaling of the parallel-transport correction.
    Transport(RunArgs),
    /// Small-time limits of the boundary expansion terms.
    Limit(RunArgs),
    /// Registered models with dimension and Euler characteristic.
    ListModels,
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<i32, CliError> {
    let env_seed = std::env::var(SEED_ENV).ok();
    let config = ExperimentConfig::resolve(experiment, args, env_seed.as_deref())?;
    let summary = run(&config)?;
    for c in &summary.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("artifacts in {}", config.out.display());
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::ListModels => {
            print!("{}", list_models());
            return ExitCode::SUCCESS;
        }
        Command::VerifyGbc(a) => (Experiment::VerifyGbc, a),
        Command::Moments(a) => (Experiment::Moments, a),
        Command::MckeanSinger(a) => (Experiment::MckeanSinger, a),
        Command::Patodi(a) => (Experiment::Patodi, a),
        Command::Scaling(a) => (Experiment::Scaling, a),
        Command::Bridge(a) => (Experiment::Bridge, a),
        Command::Reflection(a) => (Experiment::Reflection, a),
        Command::Transport(a) => (Experiment::Transport, a),
        Command::Limit(a) => (Experiment::Limit, a),
    };
    match execute(experiment, &args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
