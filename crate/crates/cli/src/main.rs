//! `entrec` — biphoton dephasing, erasure recovery, and tomography
//! simulator.
//!
//! Configuration comes from an optional flat config file, overridden by
//! repeated `--set key=value` flags, then by the dedicated `--seed`/`--out`
//! flags. Exit codes are a stable contract: 0 success, 1 validation
//! failure, 2 usage or configuration error, 3 output I/O error.

mod commands;
mod config;

use clap::{ArgAction, Parser, Subcommand};
use commands::CmdError;
use config::{parse_config, CliConfig, Source};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "entrec",
    version,
    about = "Polarization-entanglement dephasing and recovery simulator",
    after_help = "Config keys: lambda0_nm, delta_n, bandwidth_nm, sigma_convention \
                  (fwhm_of_f | fwhm_of_intensity | direct), sigma, la, l1, l2, scenario \
                  (a | recovery | esd | bell), l2_start, l2_end, l2_step, with_chsh, \
                  tomo_n, tomo_trials, tomo_jitter_deg, seed, out, char_tol, reduce_tol.\n\
                  Scenario `a` reads its single plate label from l1; sweeps always \
                  tabulate over the l2_start..l2_end grid."
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Write the command's output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed for counting simulations and validation tuples.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Override one config key, e.g. --set l1=195. Repeatable; applied in
    /// order after the file.
    #[arg(long, global = true, value_name = "KEY=VALUE", action = ArgAction::Append)]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate concurrence and success probability along the plate axis,
    /// as CSV.
    Sweep,
    /// Reduced state, concurrence, optimal linear angles, and CHSH values
    /// for one configuration.
    Chsh,
    /// Monte-Carlo tomography error bars for one configuration.
    Tomo,
    /// Cross-check closed-form spectral integrals against quadrature.
    Validate {
        #[arg(long, hide = true)]
        broken_char: bool,
    },
}

fn load_config(cli: &Cli) -> Result<CliConfig, CmdError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CmdError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text).map_err(|e| CmdError::Usage(e.to_string()))?
        }
        None => CliConfig::default(),
    };
    for (i, assignment) in cli.set.iter().enumerate() {
        let source = Source::SetArg(i + 1);
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(CmdError::Usage(format!(
                "{source}: expected KEY=VALUE, got `{assignment}`"
            )));
        };
        cfg.assign(key.trim(), value.trim(), source)
            .map_err(|e| CmdError::Usage(e.to_string()))?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.finish().map_err(|e| CmdError::Usage(e.to_string()))?;
    // The physics layer re-validates; surfacing its verdict here keeps every
    // range error on exit code 2 with a named parameter.
    cfg.experiment()
        .validate()
        .map_err(|e| CmdError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CmdError> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Sweep => commands::run_sweep(&cfg),
        Command::Chsh => commands::run_chsh(&cfg),
        Command::Tomo => commands::run_tomo(&cfg),
        Command::Validate { broken_char } => commands::run_validate(&cfg, broken_char),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
