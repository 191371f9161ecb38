mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowcsma::topology::Preset;

use config::{ConfigError, ExperimentConfig};

/// Flow-level CSMA experiments driven by TOML configuration files.
#[derive(Parser)]
#[command(name = "flowcsma", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `simulation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `simulation.jumps` (counted after the warm-up).
    #[arg(long, global = true)]
    jumps: Option<u64>,
    /// Overrides `simulation.warmup`.
    #[arg(long, global = true)]
    warmup: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// List the feasible schedules.
    Schedules,
    /// Load, capacity-region membership and an optimal schedule mixture.
    Capacity,
    /// Simulate the flow-level process; one row per load point and link.
    Simulate,
    /// Stability verdict of standard CSMA on the 3-link line, or its boundary curve.
    Region3,
    /// Fluid-limit trajectory on the 3-link line.
    Fluid,
    /// Write a configuration template.
    Init {
        #[arg(long, default_value = "line3")]
        preset: Preset,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Command::Init { preset } = cli.command {
        let text = ExperimentConfig::template(preset).to_toml();
        match &cli.out {
            Some(p) => std::fs::write(p, text)?,
            None => print!("{text}"),
        }
        return Ok(());
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.simulation.seed = s;
    }
    if let Some(j) = cli.jumps {
        cfg.simulation.jumps = j;
    }
    if let Some(w) = cli.warmup {
        cfg.simulation.warmup = w;
    }
    cfg.validate()?;
    let table = match cli.command {
        Command::Schedules => commands::schedules(&cfg)?,
        Command::Capacity => commands::capacity(&cfg)?,
        Command::Simulate => commands::simulate_cmd(&cfg)?,
        Command::Region3 => commands::region3(&cfg)?,
        Command::Fluid => commands::fluid(&cfg)?,
        Command::Init { .. } => unreachable!(),
    };
    table.emit(cli.out.as_deref().or(cfg.output.as_deref()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<flowcsma::Error>() {
        Some(flowcsma::Error::Numerical(_)) => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
