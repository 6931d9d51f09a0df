//! Gauge `rho(x) = max { (x, p) : H(p) = 1 }` and its maximizing momentum.
//!
//! Equivalently `1 / rho(x) = min { H(p) : (x, p) = 1 }`, a convex problem on
//! a hyperplane. It is solved by projected Newton steps, regularized by a
//! multiple of the residual, with a backtracking line search. The Hessian is
//! reused across iterations (and across calls via [`WarmStart`]) until
//! convergence slows down.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::SupportFn;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeOptions {
    /// Stop when `|dH/dp(p) - x / rho| < tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentumSolution {
    pub rho: f64,
    /// Maximizer normalized to `H(p) = 1`; zero when `x = 0`.
    pub p: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `|dH/dp(p) - x / rho|`.
    pub residual: f64,
    /// Set when `x = 0`: `rho = 0` and `p` is meaningless.
    pub degenerate: bool,
}

impl MomentumSolution {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::GaugeNotConverged {
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

/// Solver state carried between nearby solves along a trajectory.
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    p: Option<DVector<f64>>,
    /// Hessian at a point with `H = 1`; scales like `1/H` elsewhere.
    hess_unit: Option<DMatrix<f64>>,
}

impl WarmStart {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_momentum(p: DVector<f64>) -> Self {
        Self {
            p: Some(p),
            hess_unit: None,
        }
    }

    pub fn momentum(&self) -> Option<&DVector<f64>> {
        self.p.as_ref()
    }

    pub fn clear(&mut self) {
        self.p = None;
        self.hess_unit = None;
    }
}

pub fn gauge_rho<S: SupportFn + ?Sized>(
    support: &S,
    x: &DVector<f64>,
    opts: &GaugeOptions,
) -> Result<MomentumSolution> {
    gauge_rho_warm(support, x, opts, &mut WarmStart::new())
}

pub fn gauge_rho_warm<S: SupportFn + ?Sized>(
    support: &S,
    x: &DVector<f64>,
    opts: &GaugeOptions,
    warm: &mut WarmStart,
) -> Result<MomentumSolution> {
    let dim = support.dim();
    if x.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("state must be finite".into()));
    }
    let xx = x.norm_squared();
    if xx == 0.0 {
        return Ok(MomentumSolution {
            rho: 0.0,
            p: DVector::zeros(dim),
            converged: true,
            iterations: 0,
            residual: 0.0,
            degenerate: true,
        });
    }

    let mut p = match warm.p.as_ref() {
        Some(p0) if x.dot(p0) > 0.0 => p0.clone(),
        _ => {
            let p0 = support.initial_momentum(x);
            if x.dot(&p0) > 0.0 {
                p0
            } else {
                x.clone()
            }
        }
    };
    p /= x.dot(&p);

    let project = |v: &DVector<f64>| v - x * (x.dot(v) / xx);
    let (mut h, mut g) = support.value_grad(&p);
    let mut residual = (&g - x * h).norm();
    let mut iterations = 0;
    let mut hess_fresh = false;
    // regularization weight: the step solves (P H P + theta |r| P) d = -r
    let mut theta = 1e-3;

    while residual >= opts.tol && iterations < opts.max_iter {
        iterations += 1;
        if warm.hess_unit.is_none() {
            warm.hess_unit = Some(support.hessian(&(&p / h)));
            hess_fresh = true;
        }
        let hess = warm.hess_unit.as_ref().unwrap() / h;
        let r = project(&g);
        let reg = theta * r.norm();
        let d = regularized_newton(&hess, x, xx, &r, reg)
            .map(|d| project(&d))
            .filter(|d| g.dot(d) < 0.0)
            .unwrap_or_else(|| -&r / reg.max(f64::MIN_POSITIVE).max(hess.trace().abs()));
        let slope = g.dot(&d);

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let trial = &p + &d * t;
            let (ht, gt) = support.value_grad(&trial);
            let rt = (&gt - x * ht).norm();
            let armijo = ht <= h + 1e-4 * t * slope;
            // near the optimum the decrease is below rounding; accept on residual instead
            let flat = (slope * t).abs() < 1e-13 * h && rt < residual;
            if ht.is_finite() && (armijo || flat) {
                accepted = Some((trial, ht, gt, rt));
                break;
            }
            t *= 0.5;
        }

        match accepted {
            Some((trial, ht, gt, rt)) => {
                let slow = rt > 0.25 * residual || t < 1.0;
                if t == 1.0 {
                    theta = (theta * 0.25).max(1e-12);
                } else {
                    theta = (theta * 4.0).min(1e12);
                }
                p = trial;
                h = ht;
                g = gt;
                residual = rt;
                if slow && !hess_fresh {
                    warm.hess_unit = None;
                }
                hess_fresh = false;
            }
            None if !hess_fresh => {
                warm.hess_unit = None;
                theta = (theta * 4.0).min(1e12);
            }
            None => break,
        }
    }

    let p_unit = &p / h;
    warm.p = Some(p_unit.clone());
    Ok(MomentumSolution {
        rho: 1.0 / h,
        p: p_unit,
        converged: residual < opts.tol,
        iterations,
        residual,
        degenerate: false,
    })
}

/// Solves `(P H P + reg P + s x x^T / |x|^2) d = -r` on the tangent space of `(x, p) = 1`.
///
/// `H` vanishes on cones where the support function is locally linear, so the
/// `reg P` term keeps the system definite there.
fn regularized_newton(
    hess: &DMatrix<f64>,
    x: &DVector<f64>,
    xx: f64,
    r: &DVector<f64>,
    reg: f64,
) -> Option<DVector<f64>> {
    let n = x.len();
    let proj = DMatrix::identity(n, n) - x * x.transpose() / xx;
    let scale = (hess.trace().abs() / n as f64).max(reg).max(f64::MIN_POSITIVE);
    let k = &proj * hess * &proj + &proj * reg + x * x.transpose() * (scale / xx);
    let chol = k.cholesky()?;
    let d = chol.solve(&(-r));
    d.iter().all(|v| v.is_finite()).then_some(d)
}
