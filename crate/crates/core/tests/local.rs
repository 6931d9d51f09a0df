//! Finite-time controller: exact algebra and the controllability function.

use nalgebra::DVector;
use oscdamp::local::{delta, ClosedLoopOptions, LocalController};
use proptest::prelude::*;

fn unit(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..1.0f64, dim)
        .prop_filter("nonzero", |v| v.iter().map(|a| a * a).sum::<f64>() > 1e-3)
        .prop_map(|v| DVector::from_vec(v).normalize())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_points_have_the_prescribed_time(n in 1usize..=3, theta in 0.05..20.0f64, seed in any::<u64>()) {
        let local = LocalController::new(n).unwrap();
        let v = DVector::from_fn(2 * n, |i, _| ((seed >> (i * 7)) % 97) as f64 - 48.0 + 0.5).normalize();
        let x = local.level_point(theta, &v).unwrap();
        let t = local.solve_t(&x).unwrap().t;
        prop_assert!((t - theta).abs() <= 1e-9 * theta);
    }

    #[test]
    fn time_scales_with_the_dilation(v in unit(4), theta in 0.1..5.0f64, s in 0.1..10.0f64) {
        // x -> delta(s)^-1 x multiplies T by s
        let local = LocalController::new(2).unwrap();
        let x = local.level_point(theta, &v).unwrap();
        let dilated = x.component_div(&delta(s, 2).unwrap());
        let t = local.solve_t(&dilated).unwrap().t;
        prop_assert!((t - s * theta).abs() <= 1e-9 * s * theta);
    }

    #[test]
    fn control_respects_the_bound(v in unit(6), r in 0.0..1.0f64, theta in 0.1..10.0f64) {
        let local = LocalController::new(3).unwrap();
        let x = local.level_point(theta, &(v * r)).unwrap();
        prop_assume!(x.norm() > 0.0);
        let u = local.local_control(&x).unwrap().u;
        prop_assert!(u.abs() <= local.control_bound() * (1.0 + 1e-9));
    }
}

#[test]
fn exact_inverse_and_even_entries_up_to_four_oscillators() {
    for n in 1..=4 {
        let local = LocalController::new(n).unwrap();
        assert!(local.inverse_is_exact(), "N = {n}");
        assert!(local.entries_even(), "N = {n}");
        assert_eq!(local.q_inverse_exact()[0][0].to_string(), (2 * n * (2 * n + 1)).to_string());
        assert!(local.lyapunov().exact_definite, "N = {n}");
    }
}

#[test]
fn closed_loop_arrives_on_schedule() {
    let local = LocalController::new(2).unwrap();
    let x0 = local.level_point(1.5, &DVector::from_vec(vec![0.5, -0.5, 0.5, 0.5])).unwrap();
    let opts = ClosedLoopOptions {
        t_tol: 0.0,
        ..Default::default()
    };
    let run = local.closed_loop(&x0, &opts).unwrap();
    assert!(run.reached);
    assert!(run.final_state.norm() <= 1e-6);
    assert!(run.arrival <= 1.5 * 1.01);
    assert!(run.max_clock_drift() <= 1e-4 * 1.5);
}
