use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cqed::scenarios::{run_scenario_with, RunConfig, RunOptions, Scenario};
use cqed::CqedError;

#[derive(Parser)]
#[command(name = "cqed", version, about = "Multimode cavity QED simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in the configuration.
    Run(Common),
    /// Rabi spectra versus coupling strength.
    Spectra(Common),
    /// Chain-map coefficients, stabilized and naive.
    Chainmap(Common),
    /// Per-mode couplings beside and inside the slab.
    Couplings(Common),
    /// Check a configuration without running it.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML `key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` applied after the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Concurrent sweep points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn load(c: &Common, forced: Option<Scenario>) -> Result<RunConfig, CqedError> {
    let text = match &c.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CqedError::Config(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut overrides = c.overrides.clone();
    if let Some(s) = forced {
        overrides.push(format!("scenario=\"{}\"", s.label()));
    }
    let mut cfg = RunConfig::parse_with_overrides(&text, &overrides)?;
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CqedError> {
    let (common, forced) = match &cli.command {
        Command::Run(c) => (c, None),
        Command::Spectra(c) => (c, Some(Scenario::SpectraSweep)),
        Command::Chainmap(c) => (c, Some(Scenario::ChainmapDiagnostic)),
        Command::Couplings(c) => (c, Some(Scenario::CouplingProfile)),
        Command::Validate(c) => {
            let cfg = load(c, None)?;
            println!("ok: {} ({})", cfg.scenario.label(), cfg.hash());
            return Ok(());
        }
    };
    let cfg = load(common, forced)?;
    let bundle = run_scenario_with(&cfg, RunOptions { jobs: common.jobs.max(1) })?;
    for (name, rows) in &bundle.manifest.entries {
        println!("{}\t{rows}", bundle.dir.join(name).display());
    }
    eprintln!("{} finished in {:.2} s", cfg.scenario.label(), bundle.wall_time);
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
