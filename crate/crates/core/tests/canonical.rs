//! Reduction of random oscillator banks to the chain of integrators.

use nalgebra::DVector;
use oscdamp::canonical::CanonicalForm;
use oscdamp::{Error, System};
use proptest::prelude::*;

fn frequencies(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2..5.0f64, n)
        .prop_map(|mut w| {
            w.sort_by(f64::total_cmp);
            w
        })
        .prop_filter("well separated", |w| w.windows(2).all(|p| p[1] - p[0] >= 0.05 * p[1]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_residuals_are_small(w in (1usize..=4).prop_flat_map(frequencies)) {
        let s = System::new(&w).unwrap();
        let form = CanonicalForm::new(&s).unwrap();
        let r = form.residuals();
        prop_assert!(r.reduction_a <= 1e-9, "A residual {}", r.reduction_a);
        prop_assert!(r.reduction_b <= 1e-9, "B residual {}", r.reduction_b);
        prop_assert!(r.blocks_vs_basis <= 1e-9, "construction gap {}", r.blocks_vs_basis);
        prop_assert!(r.inverse <= 1e-9 * r.condition_number.max(1.0));
    }

    #[test]
    fn coordinates_round_trip(w in frequencies(3), x in prop::collection::vec(-5.0..5.0f64, 6)) {
        let form = CanonicalForm::new(&System::new(&w).unwrap()).unwrap();
        let x = DVector::from_vec(x);
        let back = form.from_canonical(&form.to_canonical(&x));
        prop_assert!((back - &x).amax() <= 1e-10 * (1.0 + x.amax()) * form.condition_number);
    }

    #[test]
    fn closed_loop_conjugates_to_the_chain(w in frequencies(2), x in prop::collection::vec(-5.0..5.0f64, 4), uc in -1.0..1.0f64) {
        // d/dt (D^-1 x) = A_c D^-1 x + B_c u_c when u = u_c + C x
        let s = System::new(&w).unwrap();
        let form = CanonicalForm::new(&s).unwrap();
        let x = DVector::from_vec(x);
        let u = form.control_lift(uc, &x);
        let physical = s.a() * &x + s.b() * u;
        let xc = form.to_canonical(&x);
        let chain = &form.a_frak * &xc + &form.b_frak * uc;
        let lhs = &form.d_inv * physical;
        prop_assert!((lhs - &chain).amax() <= 1e-9 * (1.0 + chain.amax()));
    }
}

#[test]
fn single_oscillator_feedback_cancels_the_spring() {
    let form = CanonicalForm::new(&System::new(&[2.0]).unwrap()).unwrap();
    assert!((form.c[0] - 4.0).abs() < 1e-12);
    assert_eq!(form.c[1], 0.0);
}

#[test]
fn duplicate_frequencies_are_rejected() {
    assert!(matches!(System::new(&[1.0, 1.0]), Err(Error::DuplicateFrequency { .. })));
}
