use std::path::PathBuf;
use std::process::ExitCode;

use betaldp::experiments::{error_exit_code, resolve_output_dir, run_experiment, ExperimentConfig, Scenario};
use betaldp::Error;
use clap::{Args, Parser, Subcommand};

/// Equilibrium measures, β-ensemble sampling and outlier rate experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the weighted equilibrium problem.
    Equilibrium(Io),
    /// Run Metropolis chains and write snapshots.
    Sample(Io),
    /// Fit outlier decay rates against the rate function.
    Ldp(Io),
    /// Estimate partition-function ratios.
    Ratio(Io),
    /// Bernstein–Markov constants and tail decay.
    Bm(Io),
}

#[derive(Args)]
struct Io {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (scenario, io) = match &cli.command {
        Command::Equilibrium(io) => (Scenario::Equilibrium, io),
        Command::Sample(io) => (Scenario::Sample, io),
        Command::Ldp(io) => (Scenario::Ldp, io),
        Command::Ratio(io) => (Scenario::Ratio, io),
        Command::Bm(io) => (Scenario::Bm, io),
    };
    let result = ExperimentConfig::load(&io.config).and_then(|cfg| {
        if cfg.scenario != scenario {
            return Err(Error::Config(format!(
                "config scenario is {:?} but subcommand is {}",
                cfg.scenario.name(),
                scenario.name()
            )));
        }
        let out = resolve_output_dir(&cfg, io.out.as_deref())?;
        run_experiment(&cfg, &out)
    });
    match result {
        Ok(outcome) => {
            for v in &outcome.verdicts {
                println!("{} {} (value {:.6e}, threshold {:.6e}) {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.value, v.threshold, v.detail);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
