//! Singular arcs keep both constraints and give the exact constant for one oscillator.

use std::f64::consts::PI;

use oscdamp::geometry::{QuadratureConfig, SupportFn, SupportFunction};
use oscdamp::highenergy::b_dot;
use oscdamp::singular::{estimate_mu, project, seeds, singular_field, MuOptions};
use oscdamp::System;

#[test]
fn singular_field_is_tangent_to_the_constraints() {
    let s = System::new(&[1.0, 2f64.sqrt()]).unwrap();
    let h = SupportFunction::new(&s, &QuadratureConfig::for_dimension(2)).unwrap();
    for seed in seeds(&h, 12).unwrap() {
        let p = project(&h, &seed).unwrap();
        assert!((h.value(&p) - 1.0).abs() < 1e-10);
        assert!(b_dot(&p).abs() < 1e-10);
        let (dp, _) = singular_field(&s, &h, &p).unwrap();
        let grad = h.value_grad(&p).1;
        assert!(b_dot(&dp).abs() < 1e-8 * (1.0 + dp.norm()), "switching function drifts");
        assert!(grad.dot(&dp).abs() < 1e-8 * (1.0 + dp.norm()), "normalization drifts");
    }
}

#[test]
fn single_oscillator_constant_is_exact() {
    for omega in [0.5, 2.0] {
        let s = System::new(&[omega]).unwrap();
        let h = SupportFunction::new(&s, &QuadratureConfig::for_dimension(1)).unwrap();
        let est = estimate_mu(&s, &h, &MuOptions::default()).unwrap();
        assert!(est.degenerate);
        assert!((est.mu_hat - 2.0 * omega / PI).abs() < 1e-12);
        assert!((est.c_of_ab - 1.1 * PI / (2.0 * omega)).abs() < 1e-12);
    }
}
