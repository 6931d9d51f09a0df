//! Choice of the terminal horizon `Theta` and the reduced bound `U` joining
//! the three stages, followed by a Monte-Carlo check of both conditions.
//!
//! ```bash
//! cargo run --release --example matching_plan
//! ```

use oscdamp::matching;
use oscdamp::sim::Controllers;
use oscdamp::System;

fn main() -> oscdamp::Result<()> {
    let system = System::new(&[1.0])?;
    let ctrl = Controllers::with_defaults(&system)?;
    let plan = &ctrl.plan;
    println!(
        "Theta = {:.6}, U = {:.6}, C(A,B) = {:.6}, condition B left side = {:.6}",
        plan.theta, plan.u, plan.c_of_ab, plan.cond_b_lhs
    );
    println!("probe: {:?}", plan.probe);
    let v = matching::verify(&ctrl.canonical, &ctrl.local, &ctrl.support, plan, 10_000, 7)?;
    println!(
        "verification over {} samples: A violations {}, B violations {}, admissibility violations {}, max|Cx| = {:.4}",
        v.samples, v.cond_a_violations, v.cond_b_violations, v.admissibility_violations, v.max_cx
    );
    Ok(())
}
