//! Invariants of the limit support function and its gauge.

use std::f64::consts::PI;

use nalgebra::DVector;
use oscdamp::geometry::{gauge_rho, GaugeOptions, QuadratureConfig, SupportFn, SupportFunction};
use oscdamp::sim::held_flow;
use oscdamp::System;
use proptest::prelude::*;

fn pair() -> (System, SupportFunction) {
    let s = System::new(&[1.0, 2f64.sqrt()]).unwrap();
    let h = SupportFunction::new(&s, &QuadratureConfig::for_dimension(2)).unwrap();
    (s, h)
}

fn state() -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-10.0..10.0f64, 4)
        .prop_filter("away from the origin", |v| v.iter().map(|a| a * a).sum::<f64>() > 1e-2)
        .prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauge_is_positively_homogeneous(x in state(), scale in 0.01..100.0f64) {
        let (_, h) = pair();
        let opts = GaugeOptions::default();
        let a = gauge_rho(&h, &x, &opts).unwrap().rho;
        let b = gauge_rho(&h, &(&x * scale), &opts).unwrap().rho;
        prop_assert!((b - scale * a).abs() <= 1e-7 * scale * a);
    }

    #[test]
    fn momentum_is_normalized_and_attains_the_gauge(x in state()) {
        let (_, h) = pair();
        let sol = gauge_rho(&h, &x, &GaugeOptions::default()).unwrap();
        prop_assert!(sol.converged);
        prop_assert!((h.value(&sol.p) - 1.0).abs() < 1e-9);
        prop_assert!((x.dot(&sol.p) - sol.rho).abs() < 1e-8 * sol.rho);
    }

    #[test]
    fn gauge_is_subadditive(x in state(), y in state()) {
        let (_, h) = pair();
        let opts = GaugeOptions::default();
        let rho = |v: &DVector<f64>| gauge_rho(&h, v, &opts).unwrap().rho;
        let sum = &x + &y;
        prop_assume!(sum.norm() > 1e-3);
        prop_assert!(rho(&sum) <= rho(&x) + rho(&y) + 1e-8);
    }

    #[test]
    fn gauge_is_invariant_under_the_free_flow(x in state(), t in 0.0..50.0f64) {
        let (s, h) = pair();
        let opts = GaugeOptions::default();
        let before = gauge_rho(&h, &x, &opts).unwrap().rho;
        let after = gauge_rho(&h, &held_flow(&s, &x, 0.0, t), &opts).unwrap().rho;
        prop_assert!((after - before).abs() <= 1e-7 * before);
    }

    #[test]
    fn support_function_is_convex_and_even(p in state(), q in state(), w in 0.0..1.0f64) {
        let (_, h) = pair();
        let mix = &p * w + &q * (1.0 - w);
        prop_assert!(h.value(&mix) <= w * h.value(&p) + (1.0 - w) * h.value(&q) + 1e-12);
        prop_assert!((h.value(&(-&p)) - h.value(&p)).abs() < 1e-12);
    }
}

#[test]
fn single_oscillator_gauge_has_closed_form() {
    for omega in [0.5, 1.0, 3.0] {
        let s = System::new(&[omega]).unwrap();
        let h = SupportFunction::new(&s, &QuadratureConfig::for_dimension(1)).unwrap();
        for x in [[1.0, 0.0], [0.0, 1.0], [-2.0, 3.5]] {
            let v = DVector::from_row_slice(&x);
            let rho = gauge_rho(&h, &v, &GaugeOptions::default()).unwrap().rho;
            let exact = PI / 2.0 * (omega * omega * x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!((rho - exact).abs() < 1e-9 * exact, "omega {omega}, x {x:?}");
        }
    }
}

#[test]
fn gauge_of_the_origin_is_degenerate() {
    let (_, h) = pair();
    let sol = gauge_rho(&h, &DVector::zeros(4), &GaugeOptions::default()).unwrap();
    assert!(sol.degenerate);
    assert_eq!(sol.rho, 0.0);
}
