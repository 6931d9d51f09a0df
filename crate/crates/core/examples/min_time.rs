//! Minimum time to the origin by bisection on membership in the reachable set,
//! compared with the limit gauge `rho`, which it approaches for large states.
//!
//! ```bash
//! cargo run --release --example min_time
//! ```

use nalgebra::DVector;
use oscdamp::geometry::{gauge_rho, min_time_oracle, GaugeOptions, MinTimeOptions, QuadratureConfig, SupportFunction};
use oscdamp::System;

fn main() -> oscdamp::Result<()> {
    for omegas in [vec![1.0], vec![1.0, 2f64.sqrt()]] {
        let system = System::new(&omegas)?;
        let h = SupportFunction::new(&system, &QuadratureConfig::for_dimension(system.n()))?;
        println!("omegas = {omegas:?}");
        for scale in [1.0, 5.0, 20.0] {
            let x = DVector::from_fn(system.dim(), |i, _| scale * if i % 2 == 0 { 1.0 } else { 0.5 });
            let tau = min_time_oracle(&system, &x, &MinTimeOptions::default())?;
            let rho = gauge_rho(&h, &x, &GaugeOptions::default())?.rho;
            println!(
                "  |x| = {:7.3}: tau = {:9.5}, rho = {:9.5}, tau/rho = {:.4} ({} membership tests)",
                x.norm(),
                tau.tau,
                rho,
                tau.tau / rho,
                tau.evaluations
            );
        }
    }
    Ok(())
}
