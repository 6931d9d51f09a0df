//! Singular-zone constant `mu`: the largest singular control seen along
//! singular trajectories, and the resulting `C(A,B) = (1 + eps) / mu`.
//!
//! ```bash
//! cargo run --release --example singular_mu
//! ```

use oscdamp::geometry::{QuadratureConfig, SupportFunction};
use oscdamp::singular::{estimate_mu, MuOptions};
use oscdamp::System;

fn main() -> oscdamp::Result<()> {
    for omegas in [vec![1.0], vec![1.0, 2f64.sqrt()]] {
        let system = System::new(&omegas)?;
        let h = SupportFunction::new(&system, &QuadratureConfig::for_dimension(system.n()))?;
        let est = estimate_mu(&system, &h, &MuOptions::default())?;
        println!(
            "omegas = {omegas:?}: mu = {:.5}, 1/mu = {:.5}, C(A,B) = {:.5} over {} trajectories",
            est.mu_hat,
            est.mu_inverse(),
            est.c_of_ab,
            est.trajectories_scanned
        );
        for (i, run) in est.runs.iter().enumerate() {
            println!(
                "  seed {i}: max|f| = {:?}, constraint violation {:.1e}",
                run.max_abs_f, run.max_constraint_violation
            );
        }
    }
    Ok(())
}
