use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use riggedframes::report::{configure_threads, emit, run, write_atomically, Command, OutputFormat, RunConfig};
use riggedframes::{Error, Result};

/// Frame, semi-frame and moment-problem diagnostics for sampled
/// distribution-valued maps.
#[derive(Debug, Parser)]
#[command(name = "riggedframes", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON run configuration; defaults to the Dirac map when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Report destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated ladder truncations, e.g. `8,16,32`.
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<usize>>,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(stages) = &cli.stages {
        config.ladder.n_max = None;
        config.ladder.stages = Some(stages.clone());
    }
    if let Some(format) = cli.format {
        config.output.format = format;
    }
    if let Some(path) = &cli.output {
        config.output.path = Some(path.clone());
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    let config = load_config(cli)?;
    let report = run(cli.command, &config)?;
    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {}: {}", check.name, check.detail);
    }
    let bytes = emit(&report, config.output.format)?;
    match &config.output.path {
        Some(path) => write_atomically(path, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(Error::from)?;
        }
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("riggedframes: one or more checks failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("riggedframes: {e}");
            ExitCode::from(2)
        }
    }
}
