use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trainrecip_cli::{
    cmd_analyze, cmd_ingest_check, cmd_simulate, cmd_solve, cmd_sweep, load_config, CommandOutput,
};

/// Employer-worker general-training game with reciprocal workers.
#[derive(Parser)]
#[command(name = "trainrecip", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Falls back to the config file, then $TRAINRECIP_OUT_DIR.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(short, long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium for each configured treatment and eta.
    Solve,
    /// Simulate a population under the strategy method.
    Simulate,
    /// Full analysis of an observation CSV.
    Analyze { input: PathBuf },
    /// Solve over the configured eta and disutility grids.
    Sweep,
    /// Validate an observation CSV, reporting offending rows.
    IngestCheck { input: PathBuf },
}

fn run(cli: Cli) -> anyhow::Result<CommandOutput> {
    let mut config = load_config(cli.config.as_deref())?;
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    let out = config.resolve_output_dir(cli.out);
    match cli.command {
        Command::Solve => cmd_solve(&config, &out),
        Command::Simulate => cmd_simulate(&config, &out),
        Command::Analyze { input } => cmd_analyze(&config, &input, &out).map(|(o, _)| o),
        Command::Sweep => cmd_sweep(&config, &out),
        Command::IngestCheck { input } => cmd_ingest_check(&config, &input),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(output) => {
            print!("{}", output.report);
            for f in &output.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
