//! Finite-time controller for the chain of integrators: exact matrices, the
//! controllability function `T(x)` and a closed-loop run that reaches the
//! origin exactly at time `T(x0)`.
//!
//! ```bash
//! cargo run --release --example local_controller
//! ```

use nalgebra::DVector;
use oscdamp::local::{ClosedLoopOptions, LocalController};

fn integers<T: ToString>(rows: &[Vec<T>]) -> String {
    let rows: Vec<String> = rows
        .iter()
        .map(|r| r.iter().map(T::to_string).collect::<Vec<_>>().join(", "))
        .collect();
    format!("[[{}]]", rows.join("], ["))
}

fn main() -> oscdamp::Result<()> {
    let one = LocalController::new(1)?;
    println!("N=1: Q = {}", integers(one.q_inverse_exact()));
    println!("     C = {:?}, kappa^2 = {}", one.c_frak().as_slice(), one.kappa_sq_exact());

    let two = LocalController::new(2)?;
    println!("N=2: Q = {}", integers(two.q_inverse_exact()));
    println!("     Lyapunov: {:?}", two.lyapunov());

    let x0 = DVector::from_vec(vec![0.02, -0.05, 0.03, 0.01]);
    let t0 = two.solve_t(&x0)?.t;
    // stop on the state norm only, not on the remaining time
    let opts = ClosedLoopOptions {
        t_tol: 0.0,
        ..Default::default()
    };
    let run = two.closed_loop(&x0, &opts)?;
    println!(
        "closed loop from T(x0) = {t0:.6}: arrival {:.6}, |x| = {:.1e}, clock drift {:.1e}, max |u| = {:.4}",
        run.arrival,
        run.final_state.norm(),
        run.max_clock_drift(),
        run.samples.iter().map(|s| s.u.abs()).fold(0.0, f64::max)
    );
    Ok(())
}
