//! Exact support function of the finite-time reachable set and the
//! minimum-time oracle built on it.
//!
//! For a momentum `p = (xi_i, eta_i)` the switching function is
//! `f(s) = (e^{sA} B, p) = sum_i xi_i sin(w_i s) / w_i + eta_i cos(w_i s)`
//! and `H_T(p) = ∫_0^T |f(s)| ds`. Between consecutive roots of `f` the
//! integral has a closed-form antiderivative, so the only numerical step is
//! root location.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use super::gauge::{gauge_rho_warm, GaugeOptions, WarmStart};
use super::SupportFn;
use crate::error::{Error, Result};
use crate::model::System;

/// Scan nodes per period of the fastest oscillator.
const SCAN_PER_PERIOD: f64 = 64.0;

#[derive(Clone, Debug)]
pub struct ReachableSupport {
    omegas: Vec<f64>,
    horizon: f64,
}

impl ReachableSupport {
    pub fn new(system: &System, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::NonPositiveTime(horizon));
        }
        Ok(Self {
            omegas: system.omegas().to_vec(),
            horizon,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn switching(&self, p: &DVector<f64>, s: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for (i, &w) in self.omegas.iter().enumerate() {
            let (sn, cs) = (w * s).sin_cos();
            f += p[2 * i] * sn / w + p[2 * i + 1] * cs;
            df += p[2 * i] * cs - p[2 * i + 1] * w * sn;
        }
        (f, df)
    }

    /// Antiderivatives of `(e^{sA} B)` componentwise.
    fn primitive(&self, s: f64, out: &mut [f64]) {
        for (i, &w) in self.omegas.iter().enumerate() {
            let (sn, cs) = (w * s).sin_cos();
            out[2 * i] = -cs / (w * w);
            out[2 * i + 1] = sn / w;
        }
    }

    /// Sorted sign changes of the switching function in `(0, T)`.
    pub fn roots(&self, p: &DVector<f64>) -> Vec<f64> {
        let w_max = self.omegas.iter().cloned().fold(0.0, f64::max);
        let spacing = 2.0 * PI / w_max / SCAN_PER_PERIOD;
        let cells = (self.horizon / spacing).ceil().max(1.0) as usize;
        let h = self.horizon / cells as f64;
        let scale: f64 = p.amax().max(f64::MIN_POSITIVE);

        let mut roots = Vec::new();
        let (mut f0, mut d0) = self.switching(p, 0.0);
        for k in 0..cells {
            let s0 = k as f64 * h;
            let s1 = if k + 1 == cells { self.horizon } else { (k + 1) as f64 * h };
            let (f1, d1) = self.switching(p, s1);
            if f1 == 0.0 && k + 1 < cells {
                roots.push(s1);
            } else if f0 * f1 < 0.0 {
                roots.push(self.refine(p, s0, s1, f0));
            } else if f0 != 0.0 && d0 * d1 < 0.0 {
                // an extremum inside the cell may hide a pair of roots
                let (sm, fm) = self.extremum(p, s0, s1, d0);
                if fm * f0 < 0.0 && fm.abs() > 1e-15 * scale {
                    roots.push(self.refine(p, s0, sm, f0));
                    roots.push(self.refine(p, sm, s1, fm));
                }
            }
            f0 = f1;
            d0 = d1;
        }
        roots
    }

    /// Safeguarded Newton on a bracket with `f(lo)` of sign `f_lo`.
    fn refine(&self, p: &DVector<f64>, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
        let mut s = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (f, df) = self.switching(p, s);
            if f == 0.0 {
                return s;
            }
            if (f > 0.0) == (f_lo > 0.0) {
                lo = s;
            } else {
                hi = s;
            }
            let newton = s - f / df;
            let next = if df != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - s).abs() <= 4.0 * f64::EPSILON * self.horizon.max(1.0) {
                return next;
            }
            s = next;
        }
        s
    }

    /// Bisection on the derivative sign; returns the extremum and the value there.
    fn extremum(&self, p: &DVector<f64>, mut lo: f64, mut hi: f64, d_lo: f64) -> (f64, f64) {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (_, d) = self.switching(p, mid);
            if (d > 0.0) == (d_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        (s, self.switching(p, s).0)
    }
}

impl SupportFn for ReachableSupport {
    fn dim(&self) -> usize {
        2 * self.omegas.len()
    }

    fn value_grad(&self, p: &DVector<f64>) -> (f64, DVector<f64>) {
        let dim = self.dim();
        let mut grad = DVector::zeros(dim);
        if p.iter().all(|&v| v == 0.0) {
            return (0.0, grad);
        }
        let mut knots = Vec::with_capacity(64);
        knots.push(0.0);
        knots.extend(self.roots(p));
        knots.push(self.horizon);

        let mut prim_a = vec![0.0; dim];
        let mut prim_b = vec![0.0; dim];
        self.primitive(0.0, &mut prim_a);
        let mut value = 0.0;
        for win in knots.windows(2) {
            let (a, b) = (win[0], win[1]);
            self.primitive(b, &mut prim_b);
            if b > a {
                let sign = if self.switching(p, 0.5 * (a + b)).0 >= 0.0 { 1.0 } else { -1.0 };
                let mut piece = 0.0;
                for j in 0..dim {
                    let d = prim_b[j] - prim_a[j];
                    piece += p[j] * d;
                    grad[j] += sign * d;
                }
                value += sign * piece;
            }
            std::mem::swap(&mut prim_a, &mut prim_b);
        }
        (value.max(0.0), grad)
    }

    fn initial_momentum(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut p = x.clone();
        for (i, &w) in self.omegas.iter().enumerate() {
            p[2 * i] *= w * w;
        }
        p
    }
}

/// `H_T(p) = ∫_0^T |(B, e^{s A^T} p)| ds`, exact up to root location.
pub fn exact_support_ht(system: &System, p: &DVector<f64>, horizon: f64) -> Result<f64> {
    system.check_dim(p.len())?;
    Ok(ReachableSupport::new(system, horizon)?.value(p))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MinTimeOptions {
    /// Absolute bracket width for the minimum time.
    pub tol: f64,
    pub gauge: GaugeOptions,
    /// Inner solves with residual above this are treated as failures.
    pub accept_residual: f64,
}

impl Default for MinTimeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            gauge: GaugeOptions {
                tol: 1e-9,
                max_iter: 500,
            },
            accept_residual: 1e-5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinTime {
    pub tau: f64,
    /// Final bracket `[lo, hi]` containing the minimum time.
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Minimum time to steer `x` to the origin with `|u| <= 1`.
///
/// The set of states steerable to zero in time `T` is the forward reachable
/// set `D(T)` reflected by `(x_i, y_i) -> (-x_i, y_i)`, so the oracle bisects
/// on `T` for membership of the reflected point in `D(T)`. Membership is
/// decided by the gauge of `D(T)` computed with the same solver as the limit
/// gauge, with `H_T` in place of `H`.
pub fn min_time_oracle(system: &System, x: &DVector<f64>, opts: &MinTimeOptions) -> Result<MinTime> {
    system.check_dim(x.len())?;
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroState("minimum time"));
    }
    let mut y = x.clone();
    for i in 0..system.n() {
        y[2 * i] = -y[2 * i];
    }

    let mut warm = WarmStart::new();
    let mut evaluations = 0;
    let mut gauge_at = |t: f64, warm: &mut WarmStart| -> Result<f64> {
        evaluations += 1;
        let support = ReachableSupport::new(system, t)?;
        let sol = gauge_rho_warm(&support, &y, &opts.gauge, warm)?;
        if !sol.converged && !(sol.residual < opts.accept_residual) {
            return Err(Error::GaugeNotConverged {
                iterations: sol.iterations,
                residual: sol.residual,
            });
        }
        Ok(sol.rho)
    };

    // bracket: gauge(lo) > 1 >= gauge(hi)
    let period = 2.0 * PI / system.max_omega();
    let mut hi = period;
    let mut lo;
    if gauge_at(hi, &mut warm)? > 1.0 {
        let mut doublings = 0;
        loop {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if gauge_at(hi, &mut warm)? <= 1.0 {
                break;
            }
            if doublings > 60 {
                return Err(Error::Bracket(format!("no upper bound up to T = {hi:e}")));
            }
        }
    } else {
        loop {
            lo = 0.5 * hi;
            if lo < 1e-12 {
                return Ok(MinTime {
                    tau: hi,
                    bracket: (0.0, hi),
                    evaluations,
                });
            }
            if gauge_at(lo, &mut warm)? > 1.0 {
                break;
            }
            hi = lo;
        }
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if gauge_at(mid, &mut warm)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MinTime {
        tau: 0.5 * (lo + hi),
        bracket: (lo, hi),
        evaluations,
    })
}
