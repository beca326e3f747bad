//! `heat-threshold`: admissibility checks, singular solutions and threshold
//! experiments for `u_t - Δu = f(u)`.
//!
//! Exit codes: 0 success, 1 failed verdict or solver error, 2 usage or
//! configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Failure, Verdict};
use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "heat-threshold",
    version,
    about = "Singular steady states and the blow-up threshold of semilinear heat equations"
)]
struct Cli {
    /// Sectioned key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Each run writes into a fresh timestamped directory below this one.
    #[arg(long, global = true, default_value = "runs")]
    out_dir: PathBuf,
    #[arg(long, global = true)]
    dim: Option<String>,
    #[arg(short, long, global = true)]
    verbose: bool,
    /// Evolve the pure heat equation (f switched off).
    #[arg(long, global = true)]
    pure_heat: bool,
    /// power-exp, cutoff-exp or pure-power.
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long = "p", global = true)]
    p: Option<String>,
    #[arg(long = "q", global = true)]
    q: Option<String>,
    #[arg(long = "a", global = true)]
    a: Option<String>,
    /// Override any configuration value, e.g. `--set solver.caps=1e4,1e5`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check admissibility of the nonlinearity.
    Check {
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the singular solution and verify its identities.
    Singular,
    /// Evolve one perturbation of the singular solution.
    Evolve,
    /// Run the monotone iteration ladders from below and above.
    Iterate,
    /// Classify a range of bump amplitudes.
    Scan,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Singular => "singular",
            Command::Evolve => "evolve",
            Command::Iterate => "iterate",
            Command::Scan => "scan",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for (key, value) in [
        ("domain.dim", &cli.dim),
        ("nonlinearity.family", &cli.family),
        ("nonlinearity.p", &cli.p),
        ("nonlinearity.q", &cli.q),
        ("nonlinearity.a", &cli.a),
    ] {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if cli.pure_heat {
        cfg.experiment.pure_heat = true;
    }
    for item in &cli.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError { key: item.clone(), message: "expected SECTION.KEY=VALUE".into() })?;
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Verdict, Failure> {
    let config = resolve(cli).map_err(Failure::Config)?;
    let spec = config.validate().map_err(Failure::Config)?;
    let run_dir = commands::run_directory(&cli.out_dir, cli.command.name())?;
    let ctx = Context { config, spec, verbose: cli.verbose, run_dir };
    let verdict = match &cli.command {
        Command::Check { out } => commands::check(&ctx, out.as_deref()),
        Command::Singular => commands::singular(&ctx),
        Command::Evolve => commands::evolve(&ctx),
        Command::Iterate => commands::iterate(&ctx),
        Command::Scan => commands::scan(&ctx),
    };
    println!("artifacts: {}", ctx.run_dir.display());
    verdict
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
