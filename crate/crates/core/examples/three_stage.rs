//! End-to-end damping of one oscillator: high-energy stage, reduced stage and
//! terminal stage, compared with the minimum time.
//!
//! ```bash
//! cargo run --release --example three_stage
//! ```

use std::f64::consts::PI;

use nalgebra::DVector;
use oscdamp::geometry::{min_time_oracle, MinTimeOptions};
use oscdamp::sim::{run_three_stage, Controllers, SimConfig, Summary};
use oscdamp::System;

fn main() -> oscdamp::Result<()> {
    let system = System::new(&[1.0])?;
    let ctrl = Controllers::with_defaults(&system)?;
    for rho0 in [50.0, 100.0, 200.0] {
        let r = rho0 / (PI / 2.0);
        let x0 = DVector::from_vec(vec![0.6 * r, 0.8 * r]);
        let traj = run_three_stage(&ctrl, &x0, &SimConfig::default())?;
        let tau = min_time_oracle(&system, &x0, &MinTimeOptions::default())?.tau;
        let s = Summary::new(&traj, Some(tau));
        println!(
            "rho0 = {rho0:5}: T = {:8.4}, T/rho0 = {:.4}, T/tau = {:.4}, stages {:?}",
            s.total_time,
            s.ratio_t_over_rho0,
            s.ratio_t_over_tau.unwrap_or(f64::NAN),
            s.stage_times
        );
    }
    Ok(())
}
