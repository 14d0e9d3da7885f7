use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use irs_assoc_cli::{parse_config, run_experiment, ConfigError, OutputFormat};
use tracing_subscriber::EnvFilter;

/// Run an IRS-association Monte-Carlo sweep and write plot-ready traces.
///
/// Log verbosity follows the SIMULATE_LOG environment variable
/// (e.g. SIMULATE_LOG=info), falling back to RUST_LOG.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Experiment config (sectioned key = value text, or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Trace output path; overrides output.path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace format; overrides output.format.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Base seed; overrides base_seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

fn main() -> Result<()> {
    let filter = std::env::var("SIMULATE_LOG")
        .ok()
        .map(EnvFilter::new)
        .unwrap_or_else(|| EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    let args = Args::parse();
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut spec = parse_config(&text)?;
    if let Some(out) = args.out {
        spec.output_path = out;
    }
    if let Some(format) = args.format {
        spec.format = format;
    }
    if let Some(seed) = args.seed {
        spec.base.base_seed = seed;
    }
    if let Some(n) = args.replications {
        spec.base.replications = n;
    }
    if let Some(n) = args.periods {
        spec.base.periods = n;
    }
    spec.base.validate().map_err(ConfigError::from)?;

    let summary = run_experiment(&spec)?;
    print!("{}", summary.table());
    println!(
        "trace: {}  summary: {}",
        spec.output_path.display(),
        spec.summary_path().display()
    );
    Ok(())
}
