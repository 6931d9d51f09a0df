//! Closed-loop simulation of the three-stage controller.
//!
//! * High energy: `u = -sign(B, p(x))` while `rho(x)` exceeds the switch radius.
//! * Reduced: `u = U * (-sign(B, p(x)))` until the canonical state enters `G_Theta`.
//! * Terminal: `u = u_c(D^-1 x) + C x` until the state is numerically at rest.
//!
//! The first two stages hold the control over each step (sample-and-hold,
//! with a minimum dwell between sign flips) and propagate the linear dynamics
//! exactly; stage switches are located by bisection on the switching
//! predicate. The terminal feedback is continuous and is integrated with RK4
//! in canonical coordinates.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalForm;
use crate::error::{Error, Result};
use crate::geometry::{GaugeOptions, QuadratureConfig, SupportFunction};
use crate::highenergy::{b_dot, check_bound, HighEnergyController};
use crate::local::{chain_field, LocalController};
use crate::matching::{self, MatchingOptions, MatchingPlan};
use crate::model::System;
use crate::singular::{estimate_mu, MuEstimate, MuOptions};

/// Version tag carried by every machine-readable output.
pub const SPEC_VERSION: &str = "1.0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StageLabel {
    HighEnergy,
    Reduced,
    Terminal,
    Done,
}

impl StageLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StageLabel::HighEnergy => "HighEnergy",
            StageLabel::Reduced => "Reduced",
            StageLabel::Terminal => "Terminal",
            StageLabel::Done => "Done",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Step; defaults to a thousandth of the fastest period.
    pub step: Option<f64>,
    pub max_time: f64,
    /// Defaults to [`Controllers::default_switch_radius`].
    pub stage1_to_2_radius: Option<f64>,
    pub deadband: f64,
    /// Minimum time between sign flips; defaults to `5 * step`.
    pub dwell_min: Option<f64>,
    pub x_tol: f64,
    pub t_tol: f64,
    /// Terminal-stage steps per unit of remaining time `T`.
    pub terminal_steps_per_t: f64,
    pub event_tol: f64,
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step: None,
            max_time: 1e4,
            stage1_to_2_radius: None,
            deadband: crate::highenergy::DEFAULT_DEADBAND,
            dwell_min: None,
            x_tol: 1e-6,
            t_tol: 1e-3,
            terminal_steps_per_t: 100.0,
            event_tol: 1e-9,
            record_every: 1,
        }
    }
}

impl SimConfig {
    pub fn step_for(&self, system: &System) -> f64 {
        self.step.unwrap_or(2.0 * PI / system.max_omega() / 1000.0)
    }

    pub fn validate(&self, system: &System) -> Result<()> {
        let step = self.step_for(system);
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Invalid(format!("step must be positive, got {step}")));
        }
        if !(self.max_time > 0.0) {
            return Err(Error::Invalid(format!("max_time must be positive, got {}", self.max_time)));
        }
        if let Some(d) = self.dwell_min {
            if d < step {
                return Err(Error::Invalid(format!("dwell_min {d} is below the step {step}")));
            }
        }
        if self.record_every == 0 {
            return Err(Error::Invalid("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where `C(A,B)`, `Theta` and `U` come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    #[serde(rename = "C_of_AB")]
    pub c_of_ab: Option<f64>,
    #[serde(rename = "Theta")]
    pub theta: Option<f64>,
    #[serde(rename = "U")]
    pub u: Option<f64>,
}

/// Everything the three stages need, built once per system.
#[derive(Clone, Debug)]
pub struct Controllers {
    pub system: System,
    pub support: SupportFunction,
    pub canonical: CanonicalForm,
    pub local: LocalController,
    pub plan: MatchingPlan,
    /// Present when `C(A,B)` was estimated rather than given.
    pub mu: Option<MuEstimate>,
}

impl Controllers {
    /// `2 C(A,B)`; the factor 2 hedges the sampled estimate of `mu`, so it drops
    /// to 1 when `mu` is known in closed form (a single oscillator).
    pub fn default_switch_radius(&self) -> f64 {
        let exact = self.mu.as_ref().is_some_and(|m| m.degenerate);
        if exact {
            self.plan.c_of_ab
        } else {
            2.0 * self.plan.c_of_ab
        }
    }

    pub fn build(
        system: &System,
        quadrature: &QuadratureConfig,
        overrides: &Overrides,
        mu_opts: &MuOptions,
        matching_opts: &MatchingOptions,
    ) -> Result<Self> {
        let support = SupportFunction::new(system, quadrature)?;
        let canonical = CanonicalForm::new(system)?;
        let local = LocalController::new(system.n())?;
        let (c_of_ab, mu) = match overrides.c_of_ab {
            Some(c) if c > 0.0 => (c, None),
            Some(c) => return Err(Error::Invalid(format!("C(A,B) must be positive, got {c}"))),
            None => {
                let est = estimate_mu(system, &support, mu_opts)?;
                (est.c_of_ab, Some(est))
            }
        };
        let theta = match overrides.theta {
            Some(t) if t > 0.0 => t,
            Some(t) => return Err(Error::NonPositiveTime(t)),
            None => matching::choose_theta(&canonical, &local, matching_opts.theta_margin)?,
        };
        let (u, probe) = matching::choose_u(&canonical, &local, &support, theta, c_of_ab, matching_opts)?;
        let u = match overrides.u {
            Some(u) => {
                check_bound(u)?;
                u
            }
            None => u,
        };
        let plan = MatchingPlan {
            theta,
            u,
            c_of_ab,
            theta_margin: matching_opts.theta_margin,
            u_margin: matching_opts.u_margin,
            cond_b_lhs: matching::cond_b_lhs(&canonical, &local, theta)?,
            probe,
        };
        Ok(Self {
            system: system.clone(),
            support,
            canonical,
            local,
            plan,
            mu,
        })
    }

    /// Same as [`Controllers::build`] with default options.
    pub fn with_defaults(system: &System) -> Result<Self> {
        Self::build(
            system,
            &QuadratureConfig::for_dimension(system.n()),
            &Overrides::default(),
            &MuOptions::default(),
            &MatchingOptions::default(),
        )
    }

    pub fn in_terminal_domain(&self, x: &DVector<f64>) -> bool {
        matching::in_g_theta(&self.canonical.to_canonical(x), self.plan.theta, &self.local)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: DVector<f64>,
    pub u: f64,
    pub stage: StageLabel,
    pub rho: Option<f64>,
    pub t_local: Option<f64>,
    /// `(Ax, -p) + |(B, p)| - 1` in the first two stages.
    pub h_resid: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StageTimes {
    pub high_energy: f64,
    pub reduced: f64,
    pub terminal: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Done,
    MaxTime,
    Failed,
    /// Stopped on entering a stage after the requested last one.
    StageLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub stage_times: StageTimes,
    pub total_time: f64,
    pub rho0: f64,
    pub outcome: Outcome,
    pub error: Option<String>,
    pub max_abs_u: f64,
    /// Times of the stage switches, in order.
    pub events: Vec<(StageLabel, f64)>,
}

impl Trajectory {
    pub fn done(&self) -> bool {
        self.outcome == Outcome::Done
    }

    /// Samples of one stage.
    pub fn stage_samples(&self, stage: StageLabel) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.stage == stage)
    }

    /// `(rho(t0) - rho(t1)) / (t1 - t0)` over a stage.
    pub fn stage_rate(&self, stage: StageLabel) -> Option<f64> {
        let mut it = self.stage_samples(stage).filter(|s| s.rho.is_some());
        let first = it.next()?;
        let last = it.last()?;
        let dt = last.t - first.t;
        (dt > 0.0).then(|| (first.rho.unwrap() - last.rho.unwrap()) / dt)
    }
}

/// Exact flow of `x' = Ax + Bu` with constant `u` over time `h`.
pub fn held_flow(system: &System, x: &DVector<f64>, u: f64, h: f64) -> DVector<f64> {
    let mut out = x.clone();
    for (i, &w) in system.omegas().iter().enumerate() {
        let shift = u / (w * w);
        let (pos, vel) = (x[2 * i] - shift, x[2 * i + 1]);
        let (s, c) = (w * h).sin_cos();
        out[2 * i] = shift + pos * c + vel / w * s;
        out[2 * i + 1] = -pos * w * s + vel * c;
    }
    out
}

/// Fixed-step RK4 of `x' = field(x)` until `predicate` turns true, located by
/// bisection (re-integrating from the step start) to `event_tol` in time.
///
/// Returns the segment `(t, x)` and the event time, if any.
pub fn integrate_stage<F, P>(
    field: F,
    x0: &DVector<f64>,
    t_span: (f64, f64),
    step: f64,
    event_tol: f64,
    mut predicate: P,
) -> Result<(Vec<(f64, DVector<f64>)>, Option<f64>)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    P: FnMut(&DVector<f64>) -> bool,
{
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let rk4 = |x: &DVector<f64>, h: f64| {
        let k1 = field(x);
        let k2 = field(&(x + &k1 * (0.5 * h)));
        let k3 = field(&(x + &k2 * (0.5 * h)));
        let k4 = field(&(x + &k3 * h));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let (mut t, end) = t_span;
    let mut x = x0.clone();
    let mut segment = vec![(t, x.clone())];
    if predicate(&x) {
        return Ok((segment, Some(t)));
    }
    while t < end {
        let h = step.min(end - t);
        let next = rk4(&x, h);
        if predicate(&next) {
            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > event_tol {
                let mid = 0.5 * (lo + hi);
                if predicate(&rk4(&x, mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let xe = rk4(&x, hi);
            segment.push((t + hi, xe));
            return Ok((segment, Some(t + hi)));
        }
        x = next;
        t += h;
        segment.push((t, x.clone()));
    }
    Ok((segment, None))
}

/// Three-stage closed loop from `x0`.
pub fn run_three_stage(ctrl: &Controllers, x0: &DVector<f64>, cfg: &SimConfig) -> Result<Trajectory> {
    run_until(ctrl, x0, cfg, StageLabel::Terminal)
}

/// Closed loop that stops with [`Outcome::StageLimit`] as soon as it would
/// enter a stage after `last`; `run_until(.., Terminal)` is the full loop.
pub fn run_until(ctrl: &Controllers, x0: &DVector<f64>, cfg: &SimConfig, last: StageLabel) -> Result<Trajectory> {
    let system = &ctrl.system;
    system.check_dim(x0.len())?;
    cfg.validate(system)?;
    if x0.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroState("simulation"));
    }
    let step = cfg.step_for(system);
    let dwell = cfg.dwell_min.unwrap_or(5.0 * step);
    let radius = cfg.stage1_to_2_radius.unwrap_or_else(|| ctrl.default_switch_radius());
    let u_bound = ctrl.plan.u;
    let local = &ctrl.local;

    let mut he = HighEnergyController::new(ctrl.support.clone()).with_options(GaugeOptions::default(), cfg.deadband);
    let rho_of = |he: &mut HighEnergyController, x: &DVector<f64>| he.momentum(x).map(|m| m.rho);
    let in_g = |x: &DVector<f64>| ctrl.in_terminal_domain(x);

    let mut traj = Trajectory {
        samples: Vec::new(),
        stage_times: StageTimes::default(),
        total_time: 0.0,
        rho0: 0.0,
        outcome: Outcome::MaxTime,
        error: None,
        max_abs_u: 0.0,
        events: Vec::new(),
    };
    traj.rho0 = rho_of(&mut he, x0)?;

    let entry_stage = |he: &mut HighEnergyController, x: &DVector<f64>, floor: StageLabel| -> Result<StageLabel> {
        let s = if in_g(x) {
            StageLabel::Terminal
        } else if rho_of(he, x)? <= radius {
            StageLabel::Reduced
        } else {
            StageLabel::HighEnergy
        };
        Ok(s.max(floor))
    };

    let mut x = x0.clone();
    let mut t = 0.0;
    let mut stage = entry_stage(&mut he, &x, StageLabel::HighEnergy)?;
    traj.events.push((stage, 0.0));
    let mut held: Option<f64> = None;
    let mut last_flip = f64::NEG_INFINITY;
    let mut t_guess: Option<f64> = None;
    let mut steps = 0usize;

    let result = (|| -> Result<()> {
        loop {
            if stage == StageLabel::Done {
                traj.outcome = Outcome::Done;
                return Ok(());
            }
            if stage > last {
                traj.outcome = Outcome::StageLimit;
                return Ok(());
            }
            if t >= cfg.max_time {
                traj.outcome = Outcome::MaxTime;
                return Ok(());
            }
            let record = steps % cfg.record_every == 0;
            steps += 1;
            match stage {
                StageLabel::HighEnergy | StageLabel::Reduced => {
                    let c = he.control_u(&x)?;
                    let candidate = c.u;
                    let sign = match held {
                        Some(h) if candidate != h && candidate != 0.0 && t - last_flip < dwell => h,
                        _ if candidate != 0.0 => candidate,
                        Some(h) => h,
                        None => 0.0,
                    };
                    if held != Some(sign) {
                        if held.is_some() {
                            last_flip = t;
                        }
                        held = Some(sign);
                    }
                    let u = if stage == StageLabel::Reduced { sign * u_bound } else { sign };
                    traj.max_abs_u = traj.max_abs_u.max(u.abs());
                    if record {
                        let ax = system.a() * &x;
                        traj.samples.push(Sample {
                            t,
                            x: x.clone(),
                            u,
                            stage,
                            rho: Some(c.rho),
                            t_local: None,
                            h_resid: Some(-ax.dot(&c.p) + b_dot(&c.p).abs() - 1.0),
                        });
                    }
                    let h = step.min(cfg.max_time - t).max(0.0);
                    let next = held_flow(system, &x, u, h);
                    let fires = |he: &mut HighEnergyController, y: &DVector<f64>| -> Result<bool> {
                        Ok(in_g(y) || (stage == StageLabel::HighEnergy && rho_of(he, y)? <= radius))
                    };
                    if fires(&mut he, &next)? {
                        let (mut lo, mut hi) = (0.0, h);
                        while hi - lo > cfg.event_tol {
                            let mid = 0.5 * (lo + hi);
                            if fires(&mut he, &held_flow(system, &x, u, mid))? {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                        }
                        x = held_flow(system, &x, u, hi);
                        add_time(&mut traj.stage_times, stage, hi);
                        t += hi;
                        let next_stage = entry_stage(&mut he, &x, stage)?;
                        if next_stage == stage {
                            // the predicate is closed; step past the boundary
                            let nudge = cfg.event_tol;
                            x = held_flow(system, &x, u, nudge);
                            t += nudge;
                        }
                        stage = entry_stage(&mut he, &x, next_stage.max(stage))?;
                        traj.events.push((stage, t));
                    } else {
                        x = next;
                        add_time(&mut traj.stage_times, stage, h);
                        t += h;
                    }
                }
                StageLabel::Terminal => {
                    let xc = ctrl.canonical.to_canonical(&x);
                    let lc = local.local_control_from(&xc, t_guess)?;
                    t_guess = Some(lc.t);
                    let u = ctrl.canonical.control_lift(lc.u, &x);
                    traj.max_abs_u = traj.max_abs_u.max(u.abs());
                    let finished = lc.t <= cfg.t_tol || x.norm() <= cfg.x_tol;
                    if record || finished {
                        traj.samples.push(Sample {
                            t,
                            x: x.clone(),
                            u,
                            stage,
                            rho: rho_of(&mut he, &x).ok(),
                            t_local: Some(lc.t),
                            h_resid: None,
                        });
                    }
                    if finished {
                        stage = StageLabel::Done;
                        traj.events.push((stage, t));
                        continue;
                    }
                    let h = step.min(lc.t / cfg.terminal_steps_per_t).min(cfg.max_time - t);
                    let guess = lc.t;
                    let field = |y: &DVector<f64>| -> Result<DVector<f64>> {
                        Ok(chain_field(y, local.local_control_from(y, Some(guess))?.u))
                    };
                    let k1 = field(&xc)?;
                    let k2 = field(&(&xc + &k1 * (0.5 * h)))?;
                    let k3 = field(&(&xc + &k2 * (0.5 * h)))?;
                    let k4 = field(&(&xc + &k3 * h))?;
                    let next = &xc + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                    x = ctrl.canonical.from_canonical(&next);
                    add_time(&mut traj.stage_times, stage, h);
                    t += h;
                }
                StageLabel::Done => unreachable!(),
            }
        }
    })();

    if let Err(e) = result {
        traj.outcome = Outcome::Failed;
        traj.error = Some(e.to_string());
    }
    traj.total_time = t;
    if traj.outcome == Outcome::Done {
        traj.samples.push(Sample {
            t,
            x: x.clone(),
            u: 0.0,
            stage: StageLabel::Done,
            rho: rho_of(&mut he, &x).ok(),
            t_local: None,
            h_resid: None,
        });
    }
    Ok(traj)
}

fn add_time(times: &mut StageTimes, stage: StageLabel, h: f64) {
    match stage {
        StageLabel::HighEnergy => times.high_energy += h,
        StageLabel::Reduced => times.reduced += h,
        StageLabel::Terminal => times.terminal += h,
        StageLabel::Done => {}
    }
}

/// Writes `t,x1,y1,...,xN,yN,u,stage,rho,T_local,h_resid`; absent values are empty.
pub fn write_csv<W: Write>(traj: &Trajectory, n: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        header.push(format!("x{i}"));
        header.push(format!("y{i}"));
    }
    header.extend(["u", "stage", "rho", "T_local", "h_resid"].map(String::from));
    let io = |e: csv::Error| Error::Simulation(format!("writing trajectory: {e}"));
    w.write_record(&header).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for s in &traj.samples {
        let mut rec = vec![s.t.to_string()];
        rec.extend(s.x.iter().map(|v| v.to_string()));
        rec.push(s.u.to_string());
        rec.push(s.stage.as_str().to_string());
        rec.push(opt(s.rho));
        rec.push(opt(s.t_local));
        rec.push(opt(s.h_resid));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Simulation(format!("writing trajectory: {e}")))?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub spec_version: &'static str,
    pub outcome: Outcome,
    pub total_time: f64,
    pub stage_times: StageTimes,
    pub rho0: f64,
    #[serde(rename = "ratio_T_over_rho0")]
    pub ratio_t_over_rho0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_oracle: Option<f64>,
    #[serde(rename = "ratio_T_over_tau", skip_serializing_if = "Option::is_none")]
    pub ratio_t_over_tau: Option<f64>,
    pub max_abs_u: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Summary {
    pub fn new(traj: &Trajectory, tau_oracle: Option<f64>) -> Self {
        Self {
            spec_version: SPEC_VERSION,
            outcome: traj.outcome,
            total_time: traj.total_time,
            stage_times: traj.stage_times,
            rho0: traj.rho0,
            ratio_t_over_rho0: traj.total_time / traj.rho0,
            tau_oracle,
            ratio_t_over_tau: tau_oracle.map(|tau| traj.total_time / tau),
            max_abs_u: traj.max_abs_u,
            error: traj.error.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn held_flow_conserves_free_energy() {
        let s = System::new(&[1.0, 2f64.sqrt()]).unwrap();
        let mut x = DVector::from_vec(vec![1.0, -0.5, 2.0, 0.3]);
        let e0 = s.block_energies(x.as_slice());
        let h = 2.0 * PI / s.max_omega() / 1000.0;
        let steps = (100.0 * 2.0 * PI / s.min_omega() / h) as usize;
        for _ in 0..steps {
            x = held_flow(&s, &x, 0.0, h);
        }
        let e1 = s.block_energies(x.as_slice());
        for (a, b) in e0.iter().zip(&e1) {
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn held_flow_matches_rk4() {
        let s = System::new(&[1.3]).unwrap();
        let x = DVector::from_vec(vec![0.4, -0.2]);
        let exact = held_flow(&s, &x, 0.7, 0.5);
        let field = |y: &DVector<f64>| {
            let mut out = DVector::zeros(2);
            s.field_into(y.as_slice(), 0.7, out.as_mut_slice());
            out
        };
        let (seg, _) = integrate_stage(field, &x, (0.0, 0.5), 1e-3, 1e-9, |_| false).unwrap();
        assert!((&seg.last().unwrap().1 - exact).amax() < 1e-12);
    }

    #[test]
    fn event_is_localized() {
        // x' = 1 crosses x = 0.3137 at t = 0.3137
        let field = |_: &DVector<f64>| DVector::from_vec(vec![1.0]);
        let (_, ev) = integrate_stage(field, &DVector::zeros(1), (0.0, 1.0), 0.01, 1e-10, |y| y[0] >= 0.3137).unwrap();
        assert!((ev.unwrap() - 0.3137).abs() <= 1e-9);
    }

    #[test]
    fn start_inside_terminal_domain() {
        let s = System::new(&[1.0]).unwrap();
        let ctrl = Controllers::with_defaults(&s).unwrap();
        let x0 = DVector::from_vec(vec![0.05, -0.02]);
        assert!(ctrl.in_terminal_domain(&x0));
        let tr = run_three_stage(&ctrl, &x0, &SimConfig::default()).unwrap();
        assert!(tr.done());
        assert_eq!(tr.stage_times.high_energy + tr.stage_times.reduced, 0.0);
        let t0 = ctrl.local.solve_t(&ctrl.canonical.to_canonical(&x0)).unwrap().t;
        assert!(tr.stage_times.terminal <= t0 * (1.0 + 1e-2));
        assert!(tr.max_abs_u <= 1.0 + 1e-12);
    }

    #[test]
    fn csv_layout() {
        let s = System::new(&[1.0]).unwrap();
        let ctrl = Controllers::with_defaults(&s).unwrap();
        let tr = run_three_stage(&ctrl, &DVector::from_vec(vec![0.05, -0.02]), &SimConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&tr, 1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,y1,u,stage,rho,T_local,h_resid");
        assert!(lines.next().unwrap().contains(",Terminal,"));
        assert!(text.trim_end().lines().last().unwrap().contains(",Done,"));
    }
}
