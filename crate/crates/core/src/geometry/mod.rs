//! Convex geometry of the limit reachable set: support functions, the gauge
//! with its momentum, and the exact finite-time reachable set used by the
//! minimum-time oracle.

mod gauge;
mod limit;
mod reachable;
mod support;

pub use gauge::{gauge_rho, gauge_rho_warm, GaugeOptions, MomentumSolution, WarmStart};
pub use limit::{grad_h, h_frak, LimitSupport, QuadratureConfig, QuadratureScheme};
pub use reachable::{exact_support_ht, min_time_oracle, MinTime, MinTimeOptions, ReachableSupport};
pub use support::{SupportFunction, ZCoordinates};

use nalgebra::{DMatrix, DVector};

/// A differentiable, positively homogeneous (degree 1) convex support function.
pub trait SupportFn {
    fn dim(&self) -> usize;

    fn value_grad(&self, p: &DVector<f64>) -> (f64, DVector<f64>);

    fn value(&self, p: &DVector<f64>) -> f64 {
        self.value_grad(p).0
    }

    /// Hessian; central differences of the gradient unless overridden.
    fn hessian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        hessian_fd(self, p, 1e-4)
    }

    /// Starting momentum for the gauge solver at state `x`.
    fn initial_momentum(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }
}

/// Symmetrized central-difference Hessian with step `rel_step * |p|`.
pub fn hessian_fd<S: SupportFn + ?Sized>(s: &S, p: &DVector<f64>, rel_step: f64) -> DMatrix<f64> {
    let n = p.len();
    let h = rel_step * p.norm().max(f64::MIN_POSITIVE);
    let mut hess = DMatrix::zeros(n, n);
    let mut q = p.clone();
    for j in 0..n {
        q[j] = p[j] + h;
        let gp = s.value_grad(&q).1;
        q[j] = p[j] - h;
        let gm = s.value_grad(&q).1;
        q[j] = p[j];
        hess.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    (&hess + hess.transpose()) * 0.5
}
