use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aggf_cli::commands::{self, DemoOptions, Outcome};
use aggf_cli::config::{parse_config, RunConfig};

/// Two-phase flow with unmatched densities on the periodic box.
#[derive(Parser)]
#[command(name = "aggf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print failures.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured scenario to `t_end`.
    Run {
        /// Continue from a snapshot instead of the scenario's initial data.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Density-gap sweep against the constant-density model.
    Stability,
    /// Distances between runs with successively halved `alpha`.
    AlphaSweep,
    /// Built-in verification suite.
    Verify,
    /// Seeded spinodal decomposition with the demo mixture.
    Demo,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load(path: Option<&PathBuf>) -> Result<Option<RunConfig>, String> {
    let Some(path) = path else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    parse_config(&text)
        .map(Some)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(cli.config.as_ref()) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let out_dir = commands::output_dir(cli.out.clone(), cfg.as_ref());
    let needs_config = matches!(cli.command, Command::Run { .. } | Command::Stability | Command::AlphaSweep);
    if needs_config && cfg.is_none() {
        return usage("this subcommand needs --config PATH");
    }
    let result: anyhow::Result<Outcome> = match &cli.command {
        Command::Run { resume } => commands::run(cfg.as_ref().unwrap(), &out_dir, resume.as_deref()),
        Command::Stability => commands::stability(cfg.as_ref().unwrap(), &out_dir),
        Command::AlphaSweep => commands::alpha(cfg.as_ref().unwrap(), &out_dir),
        Command::Verify => commands::verify(&out_dir),
        Command::Demo => match &cfg {
            Some(c) => commands::demo(&DemoOptions::from_config(c), &out_dir),
            None => DemoOptions::defaults().and_then(|o| commands::demo(&o, &out_dir)),
        },
    };
    match result {
        Ok(outcome) => {
            for line in &outcome.lines {
                if !cli.quiet || line.starts_with("FAIL") {
                    println!("{line}");
                }
            }
            if outcome.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("invariant failed: {}", outcome.failed.join(", "));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
