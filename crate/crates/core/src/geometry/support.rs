use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::limit::{LimitSupport, QuadratureConfig};
use super::SupportFn;
use crate::error::Result;
use crate::model::System;

/// Floor used for `z_i` when dividing in the chain rule.
const Z_FLOOR: f64 = 1e-12;

/// Amplitudes `z_i = sqrt(eta_i^2 + xi_i^2 / omega_i^2)` of a momentum `p = (xi_1, eta_1, ...)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZCoordinates(pub Vec<f64>);

/// Support function `H(p) = h(z(p))` of the limit body `Omega` of a concrete system.
#[derive(Clone, Debug)]
pub struct SupportFunction {
    omegas: Vec<f64>,
    limit: LimitSupport,
}

impl SupportFunction {
    pub fn new(system: &System, cfg: &QuadratureConfig) -> Result<Self> {
        Ok(Self {
            omegas: system.omegas().to_vec(),
            limit: LimitSupport::new(system.n(), cfg)?,
        })
    }

    pub fn limit(&self) -> &LimitSupport {
        &self.limit
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn z_of_p(&self, p: &DVector<f64>) -> ZCoordinates {
        ZCoordinates(
            self.omegas
                .iter()
                .enumerate()
                .map(|(i, &w)| {
                    let (xi, eta) = (p[2 * i], p[2 * i + 1]);
                    (eta * eta + xi * xi / (w * w)).sqrt()
                })
                .collect(),
        )
    }

    /// Central-difference Hessian of the gradient, step `1e-4 |p|`.
    pub fn hessian_fd(&self, p: &DVector<f64>) -> DMatrix<f64> {
        super::hessian_fd(self, p, 1e-4)
    }
}

impl SupportFn for SupportFunction {
    fn dim(&self) -> usize {
        2 * self.omegas.len()
    }

    fn value(&self, p: &DVector<f64>) -> f64 {
        self.limit.value(&self.z_of_p(p).0)
    }

    fn value_grad(&self, p: &DVector<f64>) -> (f64, DVector<f64>) {
        let z = self.z_of_p(p).0;
        let (v, g) = self.limit.value_grad(&z);
        let mut grad = DVector::zeros(p.len());
        for (i, &w) in self.omegas.iter().enumerate() {
            let zi = z[i].max(Z_FLOOR);
            grad[2 * i] = g[i] * p[2 * i] / (w * w * zi);
            grad[2 * i + 1] = g[i] * p[2 * i + 1] / zi;
        }
        (v, grad)
    }

    /// Chain rule `J^T (d2h) J + sum_i dh/dz_i * d2z_i` with the analytic Hessian of `h`.
    fn hessian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let n = self.omegas.len();
        let z = self.z_of_p(p).0;
        let znorm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (_, g) = self.limit.value_grad(&z);
        let hz = self.limit.hessian(&z);
        let mut hess = DMatrix::zeros(2 * n, 2 * n);
        if znorm == 0.0 {
            return hess;
        }
        // dz_i/dp restricted to block i; zero where z_i vanishes
        let mut jac = vec![(0.0, 0.0); n];
        for (i, &w) in self.omegas.iter().enumerate() {
            if z[i] > 1e-9 * znorm {
                jac[i] = (p[2 * i] / (w * w * z[i]), p[2 * i + 1] / z[i]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let h = hz[(i, j)];
                let (ai, bi) = jac[i];
                let (aj, bj) = jac[j];
                hess[(2 * i, 2 * j)] += h * ai * aj;
                hess[(2 * i, 2 * j + 1)] += h * ai * bj;
                hess[(2 * i + 1, 2 * j)] += h * bi * aj;
                hess[(2 * i + 1, 2 * j + 1)] += h * bi * bj;
            }
        }
        for (i, &w) in self.omegas.iter().enumerate() {
            let m = [1.0 / (w * w), 1.0];
            if z[i] > 1e-9 * znorm {
                // d2z = (M - (Mv)(Mv)^T / z^2) / z with M = diag(1/w^2, 1)
                let mv = [m[0] * p[2 * i], m[1] * p[2 * i + 1]];
                let f = g[i] / z[i];
                for r in 0..2 {
                    for c in 0..2 {
                        let diag = if r == c { m[r] } else { 0.0 };
                        hess[(2 * i + r, 2 * i + c)] += f * (diag - mv[r] * mv[c] / (z[i] * z[i]));
                    }
                }
            } else {
                // h is even in z_i, so near z_i = 0 the block is d2h/dz_i^2 * M
                hess[(2 * i, 2 * i)] += hz[(i, i)] * m[0];
                hess[(2 * i + 1, 2 * i + 1)] += hz[(i, i)] * m[1];
            }
        }
        hess
    }

    fn initial_momentum(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut p = x.clone();
        for (i, &w) in self.omegas.iter().enumerate() {
            p[2 * i] *= w * w;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn support(omegas: &[f64]) -> SupportFunction {
        let s = System::new(omegas).unwrap();
        SupportFunction::new(&s, &QuadratureConfig::for_dimension(s.n())).unwrap()
    }

    #[test]
    fn single_oscillator_values() {
        let h1 = support(&[1.0]);
        let p = DVector::from_vec(vec![0.0, 1.0]);
        assert_relative_eq!(h1.value(&p), 2.0 / PI, max_relative = 1e-15);
        let g = h1.value_grad(&p).1;
        assert_relative_eq!(g[0], 0.0);
        assert_relative_eq!(g[1], 2.0 / PI, max_relative = 1e-15);

        let h2 = support(&[2.0]);
        let p = DVector::from_vec(vec![2.0, 0.0]);
        assert_relative_eq!(h2.value(&p), 2.0 / PI, max_relative = 1e-15);
        let g = h2.value_grad(&p).1;
        assert_relative_eq!(g[0], 1.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(g[1], 0.0);

        assert_eq!(h2.value(&DVector::zeros(2)), 0.0);
    }

    #[test]
    fn single_oscillator_symbolic_hessian() {
        // H = (2/pi) sqrt(xi^2/w^2 + eta^2)
        let w = 1.7;
        let h = support(&[w]);
        let p = DVector::from_vec(vec![0.8, -0.3]);
        let r = (p[0] * p[0] / (w * w) + p[1] * p[1]).sqrt();
        let mv = [p[0] / (w * w), p[1]];
        let m = [1.0 / (w * w), 1.0];
        let hess = h.hessian(&p);
        for i in 0..2 {
            for j in 0..2 {
                let d = if i == j { m[i] } else { 0.0 };
                let expect = 2.0 / PI * (d - mv[i] * mv[j] / (r * r)) / r;
                assert_relative_eq!(hess[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn analytic_hessian_matches_finite_differences() {
        let h = support(&[1.0, 2f64.sqrt()]);
        let p = DVector::from_vec(vec![0.3, -0.9, 1.1, 0.4]);
        let a = h.hessian(&p);
        let f = h.hessian_fd(&p);
        assert!((&a - &f).amax() < 1e-5 * a.amax(), "{a}\n{f}");
    }

    #[test]
    fn gradient_homogeneous_degree_zero() {
        let h = support(&[1.0, 2f64.sqrt()]);
        let p = DVector::from_vec(vec![0.3, -0.9, 1.1, 0.4]);
        let (v, g) = h.value_grad(&p);
        let (v2, g2) = h.value_grad(&(&p * 2.0));
        assert_relative_eq!(v2, 2.0 * v, max_relative = 1e-13);
        assert!((&g - &g2).amax() < 1e-13);
        assert_relative_eq!(p.dot(&g), v, max_relative = 1e-12);
    }
}
