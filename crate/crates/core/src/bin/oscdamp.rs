use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use oscdamp::cli::{self, RunConfig, EXIT_DONE, EXIT_ERROR};
use oscdamp::Result;

/// Time-optimal damping of N oscillators by one bounded control.
#[derive(Parser)]
#[command(name = "oscdamp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; reports are also written there as `<command>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the full JSON report on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Three-stage closed loop from `x0`: trajectory CSV and summary JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run every `*.json` config in this directory in parallel.
        #[arg(long, conflicts_with = "config")]
        batch: Option<PathBuf>,
    },
    /// Gauge and momentum of `x0` with respect to the limit set.
    Gauge {
        #[command(flatten)]
        common: Common,
    },
    /// Minimum time to steer `x0` to the origin.
    Mintime {
        #[command(flatten)]
        common: Common,
        /// Bracket width for the bisection on the time.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Singular-zone constant `mu` and `C(A,B)`.
    Mu {
        #[command(flatten)]
        common: Common,
    },
    /// Matching parameters `Theta`, `U` with Monte-Carlo verification.
    Match {
        #[command(flatten)]
        common: Common,
    },
    /// Residuals of the canonical reduction.
    CheckCanonical {
        #[command(flatten)]
        common: Common,
    },
    /// Exact local-controller matrices and Lyapunov checks.
    CheckLocal {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| oscdamp::Error::Invalid("--config is required".into()))?;
    Ok(RunConfig::load(path)?.with_seed(common.seed))
}

fn emit<T: Serialize>(common: &Common, name: &str, report: &T, brief: String) -> Result<i32> {
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|e| oscdamp::Error::Invalid(format!("{}: {e}", dir.display())))?;
        cli::write_json(&dir.join(format!("{name}.json")), report)?;
    }
    if common.json {
        println!("{}", cli::to_json(report)?);
    } else {
        println!("{brief}");
    }
    Ok(EXIT_DONE)
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Simulate { common, batch } => {
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            if let Some(dir) = batch {
                let report = cli::simulate_batch(&dir, &out, common.seed)?;
                cli::write_json(&out.join("batch.json"), &report)?;
                if common.json {
                    println!("{}", cli::to_json(&report)?);
                } else {
                    for r in &report.runs {
                        println!("{}: exit {}{}", r.config, r.exit_code, r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default());
                    }
                }
                return Ok(report.exit_code());
            }
            let cfg = load(&common)?;
            let result = cli::simulate(&cfg, Path::new(&out))?;
            if common.json {
                println!("{}", cli::to_json(&result.summary)?);
            } else {
                let s = &result.summary;
                println!(
                    "{:?}: T = {:.6}, rho0 = {:.6}, T/rho0 = {:.4}; wrote {} and {}",
                    s.outcome,
                    s.total_time,
                    s.rho0,
                    s.ratio_t_over_rho0,
                    result.trajectory_path.display(),
                    result.summary_path.display()
                );
            }
            Ok(result.exit_code())
        }
        Command::Gauge { common } => {
            let r = cli::gauge_report(&load(&common)?)?;
            let brief = format!("rho = {:.12}, p = {:?}, residual = {:e}", r.rho, r.p, r.residual);
            emit(&common, "gauge", &r, brief)
        }
        Command::Mintime { common, tol } => {
            let r = cli::mintime_report(&load(&common)?, tol)?;
            let brief = format!("tau = {:.9}", r.tau);
            emit(&common, "mintime", &r, brief)
        }
        Command::Mu { common } => {
            let r = cli::mu_report(&load(&common)?)?;
            let brief = format!("mu = {:.6}, mu^-1 = {:.6}, C(A,B) = {:.6}", r.mu_hat, r.mu_inverse, r.c_of_ab);
            emit(&common, "mu", &r, brief)
        }
        Command::Match { common } => {
            let r = cli::match_report(&load(&common)?)?;
            let v = &r.verification;
            let brief = format!(
                "Theta = {:.6}, U = {:.6}, C(A,B) = {:.6}; violations A/B = {}/{} of {}",
                r.theta, r.u, r.c_of_ab, v.cond_a_violations, v.cond_b_violations, v.samples
            );
            emit(&common, "match", &r, brief)
        }
        Command::CheckCanonical { common } => {
            let r = cli::canonical_report(&load(&common)?)?;
            let brief = format!(
                "reduction residuals A/B = {:e}/{:e}, condition number {:e}",
                r.residuals.reduction_a, r.residuals.reduction_b, r.residuals.condition_number
            );
            emit(&common, "check-canonical", &r, brief)
        }
        Command::CheckLocal { common } => {
            let r = cli::local_report(&load(&common)?)?;
            let brief = format!(
                "N = {}, kappa^2 = {}, Q exact inverse: {}, even entries: {}, Lyapunov strict: {}",
                r.n, r.kappa_sq, r.inverse_is_exact, r.entries_even, r.lyapunov.strict
            );
            emit(&common, "check-local", &r, brief)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
