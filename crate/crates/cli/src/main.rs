//! `isb` — simulate, analyze, and fit interaction-sideband spectra of
//! lattice-trapped fermions from a single JSON configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isb_cli::config::{Mode, RunConfig};
use isb_cli::runner::{self, RunError};

#[derive(Parser)]
#[command(name = "isb", version, about = "Interaction-sideband spectroscopy toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker-thread count (0 = all cores). Outputs are
    /// identical at any setting.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a model spectrum with the configured engine.
    Simulate(RunArgs),
    /// Bin scans, reflect-and-subtract, and fit the line center.
    Analyze(RunArgs),
    /// Extract the singlet scattering length from scan data.
    Fit(RunArgs),
    /// Check the configuration without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read_config(path: &PathBuf) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text).map_err(RunError::Config)
}

fn execute(args: &RunArgs, expect_mode: Mode) -> Result<(), RunError> {
    let mut cfg = read_config(&args.config)?;
    if cfg.mode != expect_mode {
        return Err(RunError::Config(format!(
            "config mode {:?} does not match the subcommand",
            cfg.mode
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        cfg.parallelism = threads;
    }
    if cfg.parallelism > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build_global()
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    let loaded = cfg.load().map_err(RunError::Config)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let out = runner::run(&loaded, &args.out)?;
    for w in out.warnings.iter().skip(loaded.warnings.len()) {
        eprintln!("warning: {w}");
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn validate(path: &PathBuf) -> Result<(), RunError> {
    let cfg = read_config(path)?;
    let report = cfg.validate();
    for v in &report.violations {
        println!("violation: {v}");
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if report.violations.is_empty() {
        println!("configuration valid ({} warnings)", report.warnings.len());
        Ok(())
    } else {
        Err(RunError::Config(format!(
            "{} violations",
            report.violations.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(a) => execute(a, Mode::Simulate),
        Cmd::Analyze(a) => execute(a, Mode::Analyze),
        Cmd::Fit(a) => execute(a, Mode::Fit),
        Cmd::Validate { config } => validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e} [{}]", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
