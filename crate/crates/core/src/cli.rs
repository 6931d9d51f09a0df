//! Run configuration and the JSON reports behind the `oscdamp` subcommands.
//!
//! Every report carries a `spec_version` field; the binary only parses
//! arguments, calls into this module and maps outcomes to exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::canonical::{CanonicalForm, CanonicalResiduals};
use crate::error::{Error, Result};
use crate::geometry::{gauge_rho, min_time_oracle, GaugeOptions, MinTimeOptions, QuadratureConfig, QuadratureScheme, SupportFn, SupportFunction};
use crate::local::{LocalController, LyapunovReport};
use crate::matching::{self, MatchingOptions, ProbeStats, Verification};
use crate::model::System;
use crate::sim::{run_three_stage, write_csv, Controllers, Outcome, Overrides, SimConfig, Summary, SPEC_VERSION};
use crate::singular::{estimate_mu, MuOptions, SeedRun};

/// Exit code for a run that reached the origin (or a report that was produced).
pub const EXIT_DONE: i32 = 0;
/// Exit code for invalid input or a failed run.
pub const EXIT_ERROR: i32 = 1;
/// Exit code for a simulation stopped by `max_time`.
pub const EXIT_MAX_TIME: i32 = 2;

/// Output file names, relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub trajectory_csv: String,
    pub summary_json: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            trajectory_csv: "trajectory.csv".into(),
            summary_json: "summary.json".into(),
        }
    }
}

/// One JSON document describing a run.
///
/// Only `omegas` is required; `x0` is required by `simulate`, `gauge` and
/// `mintime`. The quadrature defaults to the dimension-dependent choice of
/// [`QuadratureConfig::for_dimension`]; `seed` seeds every random draw
/// (Monte-Carlo quadrature and the matching verification).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omegas: Vec<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub mu: MuOptions,
    #[serde(default)]
    pub matching: MatchingOptions,
    #[serde(default)]
    pub outputs: OutputPaths,
    #[serde(default)]
    pub seed: u64,
    /// Also compute the minimum time from `x0` for the summary ratios.
    #[serde(default)]
    pub tau_oracle: bool,
    /// Monte-Carlo sample count used by `match`.
    #[serde(default = "default_verify_samples")]
    pub verify_samples: usize,
}

fn default_verify_samples() -> usize {
    10_000
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    /// Reads a config file; errors name the file and the offending line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            Error::Invalid(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn system(&self) -> Result<System> {
        System::new(&self.omegas)
    }

    pub fn quadrature_for(&self, system: &System) -> QuadratureConfig {
        let mut q = self
            .quadrature
            .clone()
            .unwrap_or_else(|| QuadratureConfig::for_dimension(system.n()));
        if q.scheme == QuadratureScheme::MonteCarlo {
            q.seed = q.seed.wrapping_add(self.seed);
        }
        q
    }

    pub fn support(&self, system: &System) -> Result<SupportFunction> {
        SupportFunction::new(system, &self.quadrature_for(system))
    }

    pub fn x0(&self, system: &System) -> Result<DVector<f64>> {
        let x = self
            .x0
            .as_ref()
            .ok_or_else(|| Error::Invalid("x0 is required for this command".into()))?;
        system.check_dim(x.len())?;
        Ok(DVector::from_column_slice(x))
    }

    pub fn controllers(&self, system: &System) -> Result<Controllers> {
        Controllers::build(system, &self.quadrature_for(system), &self.overrides, &self.mu, &self.matching)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeReport {
    pub spec_version: &'static str,
    pub rho: f64,
    pub p: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `|dH/dp(p) - x / rho|`.
    pub residual: f64,
    /// `H(p) - 1`.
    pub normalization_residual: f64,
}

pub fn gauge_report(cfg: &RunConfig) -> Result<GaugeReport> {
    let system = cfg.system()?;
    let x = cfg.x0(&system)?;
    let support = cfg.support(&system)?;
    let sol = gauge_rho(&support, &x, &GaugeOptions::default())?;
    Ok(GaugeReport {
        spec_version: SPEC_VERSION,
        rho: sol.rho,
        normalization_residual: if sol.degenerate { 0.0 } else { support.value(&sol.p) - 1.0 },
        p: sol.p.as_slice().to_vec(),
        converged: sol.converged,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinTimeReport {
    pub spec_version: &'static str,
    pub tau: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

pub fn mintime_report(cfg: &RunConfig, tol: Option<f64>) -> Result<MinTimeReport> {
    let system = cfg.system()?;
    let x = cfg.x0(&system)?;
    let mut opts = MinTimeOptions::default();
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("tolerance must be positive, got {t}")));
        }
        opts.tol = t;
    }
    let mt = min_time_oracle(&system, &x, &opts)?;
    Ok(MinTimeReport {
        spec_version: SPEC_VERSION,
        tau: mt.tau,
        bracket: mt.bracket,
        evaluations: mt.evaluations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MuReport {
    pub spec_version: &'static str,
    pub mu_hat: f64,
    pub mu_inverse: f64,
    #[serde(rename = "C_of_AB")]
    pub c_of_ab: f64,
    pub epsilon: f64,
    pub trajectories_scanned: usize,
    pub per_trajectory_max_f: Vec<Option<f64>>,
    pub best: usize,
    pub degenerate: bool,
    pub runs: Vec<SeedRun>,
}

pub fn mu_report(cfg: &RunConfig) -> Result<MuReport> {
    let system = cfg.system()?;
    let support = cfg.support(&system)?;
    let est = estimate_mu(&system, &support, &cfg.mu)?;
    Ok(MuReport {
        spec_version: SPEC_VERSION,
        mu_hat: est.mu_hat,
        mu_inverse: est.mu_inverse(),
        c_of_ab: est.c_of_ab,
        epsilon: est.epsilon,
        trajectories_scanned: est.trajectories_scanned,
        per_trajectory_max_f: est.per_trajectory_max_f,
        best: est.best,
        degenerate: est.degenerate,
        runs: est.runs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Margins {
    pub theta: f64,
    pub u: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchReport {
    pub spec_version: &'static str,
    #[serde(rename = "Theta")]
    pub theta: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "C_of_AB")]
    pub c_of_ab: f64,
    pub margins: Margins,
    pub cond_b_lhs: f64,
    pub probe: ProbeStats,
    pub verification: Verification,
}

pub fn match_report(cfg: &RunConfig) -> Result<MatchReport> {
    let system = cfg.system()?;
    let ctrl = cfg.controllers(&system)?;
    let verification = matching::verify(
        &ctrl.canonical,
        &ctrl.local,
        &ctrl.support,
        &ctrl.plan,
        cfg.verify_samples,
        cfg.seed,
    )?;
    let plan = ctrl.plan;
    Ok(MatchReport {
        spec_version: SPEC_VERSION,
        theta: plan.theta,
        u: plan.u,
        c_of_ab: plan.c_of_ab,
        margins: Margins {
            theta: plan.theta_margin,
            u: plan.u_margin,
        },
        cond_b_lhs: plan.cond_b_lhs,
        probe: plan.probe,
        verification,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CanonicalReport {
    pub spec_version: &'static str,
    pub c: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub residuals: CanonicalResiduals,
    pub warnings: Vec<String>,
}

pub fn canonical_report(cfg: &RunConfig) -> Result<CanonicalReport> {
    let system = cfg.system()?;
    let form = CanonicalForm::new(&system)?;
    Ok(CanonicalReport {
        spec_version: SPEC_VERSION,
        c: form.c.as_slice().to_vec(),
        lambdas: form.lambdas.clone(),
        residuals: form.residuals(),
        warnings: form.warnings(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalReport {
    pub spec_version: &'static str,
    pub n: usize,
    /// Exact entries of `Q` as rationals, row-major.
    pub q: Vec<Vec<String>>,
    /// Exact integer entries of `q = Q^-1`.
    pub q_inverse: Vec<Vec<String>>,
    pub c_frak: Vec<f64>,
    pub kappa_sq: String,
    pub control_bound: f64,
    pub inverse_is_exact: bool,
    pub entries_even: bool,
    pub lyapunov: LyapunovReport,
}

pub fn local_report(cfg: &RunConfig) -> Result<LocalReport> {
    let system = cfg.system()?;
    let local = LocalController::new(system.n())?;
    Ok(LocalReport {
        spec_version: SPEC_VERSION,
        n: local.n(),
        q: local.q_exact().iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect(),
        q_inverse: local.q_inverse_exact().iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect(),
        c_frak: local.c_frak().as_slice().to_vec(),
        kappa_sq: local.kappa_sq_exact().to_string(),
        control_bound: local.control_bound(),
        inverse_is_exact: local.inverse_is_exact(),
        entries_even: local.entries_even(),
        lyapunov: local.lyapunov().clone(),
    })
}

/// Result of one `simulate` run.
#[derive(Clone, Debug)]
pub struct SimulateResult {
    pub summary: Summary,
    pub trajectory_path: PathBuf,
    pub summary_path: PathBuf,
}

impl SimulateResult {
    pub fn exit_code(&self) -> i32 {
        outcome_exit_code(self.summary.outcome)
    }
}

pub fn outcome_exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Done | Outcome::StageLimit => EXIT_DONE,
        Outcome::MaxTime => EXIT_MAX_TIME,
        Outcome::Failed => EXIT_ERROR,
    }
}

/// Runs the three-stage loop from `x0` and writes the trajectory CSV and the
/// summary JSON into `out_dir`.
pub fn simulate(cfg: &RunConfig, out_dir: &Path) -> Result<SimulateResult> {
    let system = cfg.system()?;
    let x0 = cfg.x0(&system)?;
    cfg.sim.validate(&system)?;
    let ctrl = cfg.controllers(&system)?;
    let traj = run_three_stage(&ctrl, &x0, &cfg.sim)?;
    let tau = if cfg.tau_oracle {
        Some(min_time_oracle(&system, &x0, &MinTimeOptions::default())?.tau)
    } else {
        None
    };
    let summary = Summary::new(&traj, tau);

    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let trajectory_path = out_dir.join(&cfg.outputs.trajectory_csv);
    let file = fs::File::create(&trajectory_path).map_err(|e| io_error(&trajectory_path, e))?;
    write_csv(&traj, system.n(), std::io::BufWriter::new(file))?;
    let summary_path = out_dir.join(&cfg.outputs.summary_json);
    write_json(&summary_path, &summary)?;
    Ok(SimulateResult {
        summary,
        trajectory_path,
        summary_path,
    })
}

/// Outcome of one config in a batch.
#[derive(Clone, Debug, Serialize)]
pub struct BatchEntry {
    pub config: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchReport {
    pub spec_version: &'static str,
    pub runs: Vec<BatchEntry>,
}

impl BatchReport {
    /// 1 if any run errored, else 2 if any hit `max_time`, else 0.
    pub fn exit_code(&self) -> i32 {
        let codes = self.runs.iter().map(|r| r.exit_code);
        if codes.clone().any(|c| c == EXIT_ERROR) {
            EXIT_ERROR
        } else if codes.into_iter().any(|c| c == EXIT_MAX_TIME) {
            EXIT_MAX_TIME
        } else {
            EXIT_DONE
        }
    }
}

/// Runs every `*.json` config in `dir` in parallel; each run writes into
/// `out_dir/<config stem>/`. Entries are reported in file-name order.
pub fn simulate_batch(dir: &Path, out_dir: &Path, seed: Option<u64>) -> Result<BatchReport> {
    let mut configs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_error(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    configs.sort();

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<BatchEntry>>> = Mutex::new(vec![None; configs.len()]);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(configs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = configs.get(i) else { break };
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let run = RunConfig::load(path)
                    .map(|c| c.with_seed(seed))
                    .and_then(|c| simulate(&c, &out_dir.join(&stem)));
                let entry = match run {
                    Ok(r) => BatchEntry {
                        config: path.display().to_string(),
                        exit_code: r.exit_code(),
                        summary: Some(r.summary),
                        error: None,
                    },
                    Err(e) => BatchEntry {
                        config: path.display().to_string(),
                        exit_code: EXIT_ERROR,
                        summary: None,
                        error: Some(e.to_string()),
                    },
                };
                results.lock().expect("batch results poisoned")[i] = Some(entry);
            });
        }
    });
    let runs = results
        .into_inner()
        .expect("batch results poisoned")
        .into_iter()
        .flatten()
        .collect();
    Ok(BatchReport {
        spec_version: SPEC_VERSION,
        runs,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(format!("serializing report: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Invalid(format!("{}: {e}", path.display()))
}
