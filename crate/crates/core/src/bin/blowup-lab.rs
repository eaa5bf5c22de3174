use std::path::PathBuf;
use std::process::ExitCode;

use blowup_core::experiment::{run, ExperimentConfig, Scenario};
use blowup_core::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blowup-lab", version, about = "Blow-up experiments for u_t = Δu + |u|^{p−1}u + h(u)")]
struct Cli {
    /// TOML experiment file; defaults are used for anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Concurrent sweep cells (0: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// RNG seed for noisy initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Validate and print the resolved config without running.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Scalar blow-up ODE and its rate constant
    OdeRate,
    /// Integrated φ(s) against its asymptotic series
    PhiSeries,
    /// Branches of α′ = α² + c s^{−q} over a grid of starts
    AlphaDichotomy,
    /// Physical-frame blow-up run with rate and lower-bound checks
    PdeBlowup,
    /// Functionals along a similarity run and the monotonicity check
    LyapunovAudit,
    /// Linearize a similarity run and decide the asymptotic case
    Classify,
    /// Convergence toward a closed-form profile on the extended region
    ProfileCheck,
    /// Cartesian product over config values, one output directory per cell
    Sweep,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::OdeRate => Scenario::OdeRate,
            Command::PhiSeries => Scenario::PhiSeries,
            Command::AlphaDichotomy => Scenario::AlphaDichotomy,
            Command::PdeBlowup => Scenario::PdeBlowup,
            Command::LyapunovAudit => Scenario::LyapunovAudit,
            Command::Classify => Scenario::Classify,
            Command::ProfileCheck => Scenario::ProfileCheck,
            Command::Sweep => Scenario::Sweep,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let scenario = Scenario::from(cli.command);
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                field: path.display().to_string(),
                reason: e.to_string(),
            })?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::new(scenario),
    };
    config.scenario = scenario;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(w) = cli.workers {
        config.sweep.workers = w;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.dry_run {
        match config.to_toml() {
            Ok(t) => {
                print!("{t}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    match run(&config, &cli.out) {
        Ok(outcome) => {
            for (k, v) in &outcome.summary {
                println!("{k} = {v}");
            }
            println!("wrote {} files to {}", outcome.manifest.files.len(), cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("partial artifacts kept in {}", cli.out.display());
            ExitCode::from(1)
        }
    }
}
