//! High-energy feedback symmetries and the exact held flow.

use nalgebra::DVector;
use oscdamp::geometry::{QuadratureConfig, SupportFunction};
use oscdamp::highenergy::control_u;
use oscdamp::sim::held_flow;
use oscdamp::System;
use proptest::prelude::*;

fn setup() -> (System, SupportFunction) {
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
    fn sign_is_scale_invariant_and_odd(x in state(), scale in 0.1..100.0f64) {
        let (_, h) = setup();
        let c = control_u(&h, &x).unwrap();
        prop_assume!(c.sign_argument.abs() > 1e-6);
        prop_assert_eq!(control_u(&h, &(&x * scale)).unwrap().u, c.u);
        prop_assert_eq!(control_u(&h, &(-&x)).unwrap().u, -c.u);
    }

    #[test]
    fn held_flow_is_a_semigroup(x in state(), u in -1.0..1.0f64, a in 0.0..5.0f64, b in 0.0..5.0f64) {
        let (s, _) = setup();
        let two = held_flow(&s, &held_flow(&s, &x, u, a), u, b);
        let one = held_flow(&s, &x, u, a + b);
        prop_assert!((two - one).amax() <= 1e-10 * (1.0 + x.amax()));
    }

    #[test]
    fn held_flow_matches_fine_integration(x in state(), u in -1.0..1.0f64, t in 0.0..3.0f64) {
        let (s, _) = setup();
        let steps = 2000;
        let h = t / steps as f64;
        let field = |y: &DVector<f64>| s.a() * y + s.b() * u;
        let mut y = x.clone();
        for _ in 0..steps {
            let k1 = field(&y);
            let k2 = field(&(&y + &k1 * (0.5 * h)));
            let k3 = field(&(&y + &k2 * (0.5 * h)));
            let k4 = field(&(&y + &k3 * h));
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        prop_assert!((held_flow(&s, &x, u, t) - y).amax() <= 1e-9 * (1.0 + x.amax()));
    }
}
