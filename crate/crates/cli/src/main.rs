use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use w2a_cli::checks::Tolerances;
use w2a_cli::commands;
use w2a_cli::config::{self, Overrides};
use w2a_cli::error::CliError;

#[derive(Parser)]
#[command(
    name = "w2a",
    version,
    about = "Water-to-air optical channel experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; 0 uses every available core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo run for one link geometry.
    Simulate(Common),
    /// Weibull fits of the arrival angle across wind speeds.
    FitAoa(Common),
    /// Two-component Beta mixture fits of the pointing gain.
    FitBmm(Common),
    /// Closed-form and simulated outage over the configured grid.
    OutageCurve(Common),
    /// Path loss over depth and wind speed.
    Pathloss(Common),
    /// Runs every consistency check and reports pass or fail.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Replaces every check tolerance with this value.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Simulate(c)
        | Command::FitAoa(c)
        | Command::FitBmm(c)
        | Command::OutageCurve(c)
        | Command::Pathloss(c) => c,
        Command::Validate { common, .. } => common,
    };
    let overrides = Overrides {
        seed: common.seed,
        trials: common.trials,
        workers: common.workers,
    };
    let cfg = config::load(common.config.as_deref(), &overrides)?;
    for u in cfg.extrapolated_winds() {
        eprintln!("warning: wind speed {u} m/s is outside the fitted regression range");
    }
    let out = &common.out;
    match &cli.command {
        Command::Simulate(_) => {
            let r = commands::simulate(&cfg, out)?;
            println!(
                "interruption {:.6} (closed form {:.6}), outage {}",
                r.empirical_interruption.value,
                r.closed_form.interruption.p_int,
                r.empirical_outage
                    .map(|e| format!("{:.6}", e.value))
                    .unwrap_or_else(|| "n/a".into())
            );
        }
        Command::FitAoa(_) => {
            let s = commands::fit_aoa(&cfg, out)?;
            for n in &s.notes {
                eprintln!("note: {n}");
            }
            if let Some(f) = &s.lambda_regression {
                println!(
                    "lambda = {:.4} + {:.4} U (published {} + {} U)",
                    f.intercept, f.slope, s.published_intercept, s.published_slope
                );
            }
        }
        Command::FitBmm(_) => {
            let cells = commands::fit_bmm(&cfg, out)?;
            println!("{} mixture fits written", cells.len());
        }
        Command::OutageCurve(_) => {
            let rows = commands::outage_curve(&cfg, out)?;
            let agree = rows.iter().filter(|r| r.agrees).count();
            println!(
                "{agree} of {} grid points agree within 3 standard errors",
                rows.len()
            );
        }
        Command::Pathloss(_) => {
            let rows = commands::pathloss(&cfg, out)?;
            println!("{} path loss rows written", rows.len());
        }
        Command::Validate { tolerance, .. } => {
            let tol = tolerance.map(Tolerances::uniform).unwrap_or_default();
            let res = commands::validate(&cfg, out, &tol);
            let path = out.join("validation.csv");
            match &res {
                Ok(r) => println!("all {} checks passed; see {}", r.len(), path.display()),
                Err(CliError::ChecksFailed { .. }) => {
                    eprintln!("see {}", path.display());
                }
                Err(_) => {}
            }
            res?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
