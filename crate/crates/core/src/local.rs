//! Terminal controller in canonical coordinates.
//!
//! With `q_ij = 1 / ((i+j)(i+j-1))`, `Q = q^-1`, `M = diag(1, ..., 2N)` and
//! `kappa^2 = 1 / (2N(2N+1))`, the controllability function `T(x)` is the
//! unique root of `(Q delta(T) x, delta(T) x) = kappa^2` with
//! `delta(T) = diag(T^-1, ..., T^-2N)`, and the feedback
//! `u(x) = C_c delta(T(x)) x`, `C_c = -(1/2) e_1^T Q`, steers `x` to the
//! origin in exactly time `T(x)` with `|u| <= 1/2`.
//!
//! `q` is a Hilbert-like matrix, so `Q` is computed in exact rational
//! arithmetic and converted to floating point once.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::canonical::canonical_pair;
use crate::error::{Error, Result};

/// Required normalized eigenvalue margin for the Lyapunov checks.
pub const LYAPUNOV_MARGIN: f64 = 1e-9;

/// `diag(T^-1, ..., T^-2N)` as a vector.
pub fn delta(t: f64, n: usize) -> Result<DVector<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::NonPositiveTime(t));
    }
    let mut d = DVector::zeros(2 * n);
    let mut acc = 1.0;
    for k in 0..2 * n {
        acc /= t;
        d[k] = acc;
    }
    Ok(d)
}

/// Eigenvalue checks of the common quadratic Lyapunov function.
#[derive(Clone, Debug, Serialize)]
pub struct LyapunovReport {
    /// `min eig / max |eig|` of `MQ + QM`; positive when definite.
    pub m_min_eig_normalized: f64,
    /// `max eig / max |eig|` of `S^T Q + Q S`, `S = A_c + B_c C_c`; negative when definite.
    pub s_max_eig_normalized: f64,
    /// Both signs hold with margin [`LYAPUNOV_MARGIN`].
    pub strict: bool,
    /// Definiteness of both matrices certified by exact `LDL^T` pivots.
    pub exact_definite: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ControllabilityValue {
    pub t: f64,
    /// `g(T) / kappa^2 - 1` at the returned root.
    pub residual: f64,
    pub iterations: usize,
    /// `dg/dT` at the root; negative.
    pub slope: f64,
    /// Set for `x = 0`, where `T = 0` by continuity.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalControl {
    pub u: f64,
    pub t: f64,
}

#[derive(Clone, Debug)]
pub struct LocalController {
    n: usize,
    q_exact: Vec<Vec<BigRational>>,
    q_inv_exact: Vec<Vec<BigInt>>,
    kappa_sq_exact: BigRational,
    q: DMatrix<f64>,
    big_q: DMatrix<f64>,
    c_frak: DVector<f64>,
    kappa_sq: f64,
    /// `kappa L^-T` with `Q = L L^T`; maps the unit sphere onto `{g(1, .) = kappa^2}`.
    level_map: DMatrix<f64>,
    lyapunov: LyapunovReport,
}

/// Same as [`LocalController::new`].
pub fn build_controller(n: usize) -> Result<LocalController> {
    LocalController::new(n)
}

impl LocalController {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoFrequencies);
        }
        let dim = 2 * n;
        let q_exact: Vec<Vec<BigRational>> = (1..=dim)
            .map(|i| {
                (1..=dim)
                    .map(|j| BigRational::new(BigInt::one(), BigInt::from((i + j) * (i + j - 1))))
                    .collect()
            })
            .collect();
        let inv = rational_inverse(&q_exact)?;
        let q_inv_exact = inv
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| {
                        if v.is_integer() {
                            Ok(v.to_integer())
                        } else {
                            Err(Error::Invalid(format!("non-integer entry {v} in Q")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let to_f = |v: &BigRational| v.to_f64().unwrap_or(f64::NAN);
        let q = DMatrix::from_fn(dim, dim, |i, j| to_f(&q_exact[i][j]));
        let big_q = DMatrix::from_fn(dim, dim, |i, j| q_inv_exact[i][j].to_f64().unwrap_or(f64::NAN));
        let c_frak = DVector::from_fn(dim, |j, _| -0.5 * big_q[(0, j)]);
        let kappa_sq_exact = BigRational::new(BigInt::one(), BigInt::from(dim * (dim + 1)));
        let kappa_sq = to_f(&kappa_sq_exact);
        let chol = big_q
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Invalid("Q is not positive definite in floating point".into()))?;
        let level_map = chol
            .l()
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::Invalid("Cholesky factor of Q is singular".into()))?
            * kappa_sq.sqrt();

        let mut ctrl = Self {
            n,
            q_exact,
            q_inv_exact,
            kappa_sq_exact,
            q,
            big_q,
            c_frak,
            kappa_sq,
            level_map,
            lyapunov: LyapunovReport {
                m_min_eig_normalized: 0.0,
                s_max_eig_normalized: 0.0,
                strict: false,
                exact_definite: false,
            },
        };
        ctrl.lyapunov = ctrl.check_lyapunov();
        Ok(ctrl)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn q_exact(&self) -> &[Vec<BigRational>] {
        &self.q_exact
    }

    /// Exact `Q = q^-1`.
    pub fn q_inverse_exact(&self) -> &[Vec<BigInt>] {
        &self.q_inv_exact
    }

    pub fn kappa_sq_exact(&self) -> &BigRational {
        &self.kappa_sq_exact
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn big_q(&self) -> &DMatrix<f64> {
        &self.big_q
    }

    pub fn c_frak(&self) -> &DVector<f64> {
        &self.c_frak
    }

    /// Diagonal of `M`.
    pub fn m_frak(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |k, _| (k + 1) as f64)
    }

    pub fn kappa_sq(&self) -> f64 {
        self.kappa_sq
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_sq.sqrt()
    }

    /// `(kappa / 2) sqrt(Q_11)`, the a priori bound on `|u|`.
    pub fn control_bound(&self) -> f64 {
        0.5 * self.kappa() * self.big_q[(0, 0)].sqrt()
    }

    pub fn lyapunov(&self) -> &LyapunovReport {
        &self.lyapunov
    }

    /// `Q q = I` in exact arithmetic.
    pub fn inverse_is_exact(&self) -> bool {
        let dim = self.dim();
        (0..dim).all(|i| {
            (0..dim).all(|j| {
                let mut acc = BigRational::zero();
                for k in 0..dim {
                    acc += BigRational::from_integer(self.q_inv_exact[i][k].clone()) * &self.q_exact[k][j];
                }
                if i == j {
                    acc.is_one()
                } else {
                    acc.is_zero()
                }
            })
        })
    }

    pub fn entries_even(&self) -> bool {
        let two = BigInt::from(2);
        self.q_inv_exact
            .iter()
            .flatten()
            .all(|v| (v % &two).is_zero())
    }

    fn check_lyapunov(&self) -> LyapunovReport {
        let dim = self.dim();
        let m = self.m_frak();
        let mq = DMatrix::from_fn(dim, dim, |i, j| (m[i] + m[j]) * self.big_q[(i, j)]);
        let (a, b) = canonical_pair(self.n);
        let s = a + b * self.c_frak.transpose();
        let sq = s.transpose() * &self.big_q + &self.big_q * &s;
        let normalized = |mat: DMatrix<f64>| {
            let eig = SymmetricEigen::new(mat).eigenvalues;
            let scale = eig.amax().max(f64::MIN_POSITIVE);
            (eig.min() / scale, eig.max() / scale)
        };
        let (m_min, _) = normalized(mq);
        let (_, s_max) = normalized(sq);

        // exact: Q is integral and C_c = -Q_1. / 2 is integral because Q is even
        let q = |i: usize, j: usize| BigRational::from_integer(self.q_inv_exact[i][j].clone());
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let c = |j: usize| -q(0, j) * &half;
        let mq_exact: Vec<Vec<BigRational>> = (0..dim)
            .map(|i| (0..dim).map(|j| q(i, j) * BigRational::from_integer(BigInt::from(i + j + 2))).collect())
            .collect();
        // (S^T Q)_ij = sum_k S_ki Q_kj with S_0j = c_j and S_k,k-1 = -k
        let stq = |i: usize, j: usize| {
            let mut acc = c(i) * q(0, j);
            if i + 1 < dim {
                acc -= BigRational::from_integer(BigInt::from(i + 1)) * q(i + 1, j);
            }
            acc
        };
        let neg_sq: Vec<Vec<BigRational>> = (0..dim)
            .map(|i| (0..dim).map(|j| -(stq(i, j) + stq(j, i))).collect())
            .collect();
        LyapunovReport {
            m_min_eig_normalized: m_min,
            s_max_eig_normalized: s_max,
            strict: m_min >= LYAPUNOV_MARGIN && s_max <= -LYAPUNOV_MARGIN,
            exact_definite: rational_positive_definite(&mq_exact) && rational_positive_definite(&neg_sq),
        }
    }

    /// `g(T) = (Q delta(T) x, delta(T) x)` and `dg/d(ln T)`.
    pub fn g(&self, x: &DVector<f64>, t: f64) -> (f64, f64) {
        let dim = self.dim();
        let mut y = vec![0.0; dim];
        let mut scale = 1.0;
        for k in 0..dim {
            scale /= t;
            y[k] = x[k] * scale;
        }
        let mut g = 0.0;
        let mut dg = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let term = self.big_q[(i, j)] * y[i] * y[j];
                g += term;
                dg -= (i + j + 2) as f64 * term;
            }
        }
        (g, dg)
    }

    /// Whether `x` lies in `{T <= theta} = {g(theta) <= kappa^2}`.
    /// `delta(theta)^-1 kappa L^-T v`: on the boundary `T(x) = theta` for a
    /// unit `v`, inside `G_theta` for `|v| < 1`.
    pub fn level_point(&self, theta: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let scale = delta(theta, self.n)?;
        Ok((&self.level_map * v).component_div(&scale))
    }

    pub fn within(&self, x: &DVector<f64>, theta: f64) -> bool {
        self.g(x, theta).0 <= self.kappa_sq
    }

    pub fn solve_t(&self, x: &DVector<f64>) -> Result<ControllabilityValue> {
        self.solve_t_from(x, None)
    }

    /// Newton on `ln T` for `ln g(T) = ln kappa^2`, safeguarded by a bracket.
    pub fn solve_t_from(&self, x: &DVector<f64>, guess: Option<f64>) -> Result<ControllabilityValue> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().all(|&v| v == 0.0) {
            return Ok(ControllabilityValue {
                t: 0.0,
                residual: 0.0,
                iterations: 0,
                slope: 0.0,
                degenerate: true,
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("state must be finite".into()));
        }
        let target = self.kappa_sq.ln();
        let phi = |s: f64| {
            let (g, dg) = self.g(x, s.exp());
            (g.ln() - target, dg / g)
        };
        let s0 = match guess {
            Some(t) if t > 0.0 && t.is_finite() => t.ln(),
            _ => x
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, v)| v.abs().ln() / (k + 1) as f64)
                .fold(f64::NEG_INFINITY, f64::max),
        };

        // bracket: phi(lo) > 0 > phi(hi); phi is decreasing in s
        let (mut f, mut df) = phi(s0);
        let mut iterations = 0;
        let (mut lo, mut hi);
        let mut width = 0.5;
        if f > 0.0 {
            lo = s0;
            loop {
                hi = lo + width;
                iterations += 1;
                if phi(hi).0 <= 0.0 {
                    break;
                }
                lo = hi;
                width *= 2.0;
                if width > 1e4 {
                    return Err(Error::Bracket("controllability function".into()));
                }
            }
        } else {
            hi = s0;
            loop {
                lo = hi - width;
                iterations += 1;
                if phi(lo).0 > 0.0 {
                    break;
                }
                hi = lo;
                width *= 2.0;
                if width > 1e4 {
                    return Err(Error::Bracket("controllability function".into()));
                }
            }
        }

        let mut s = if s0 > lo && s0 < hi { s0 } else { 0.5 * (lo + hi) };
        if s != s0 {
            (f, df) = phi(s);
        }
        for _ in 0..200 {
            iterations += 1;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let newton = s - f / df;
            let next = if df < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - s).abs();
            s = next;
            (f, df) = phi(s);
            if step <= 1e-15 * s.abs().max(1.0) || f.abs() <= 1e-14 {
                break;
            }
        }
        let t = s.exp();
        let (g, dg) = self.g(x, t);
        Ok(ControllabilityValue {
            t,
            residual: g / self.kappa_sq - 1.0,
            iterations,
            slope: dg / t,
            degenerate: false,
        })
    }

    /// `u(x) = C_c delta(T(x)) x`; zero at the origin.
    pub fn local_control(&self, x: &DVector<f64>) -> Result<LocalControl> {
        self.local_control_from(x, None)
    }

    pub fn local_control_from(&self, x: &DVector<f64>, guess: Option<f64>) -> Result<LocalControl> {
        let tv = self.solve_t_from(x, guess)?;
        if tv.degenerate {
            return Ok(LocalControl { u: 0.0, t: 0.0 });
        }
        let d = delta(tv.t, self.n)?;
        let u = (0..self.dim()).map(|k| self.c_frak[k] * d[k] * x[k]).sum();
        Ok(LocalControl { u, t: tv.t })
    }

    /// Integrates `x' = A_c x + B_c u(x)` with RK4 and step `T(x) / steps_per_t`.
    pub fn closed_loop(&self, x0: &DVector<f64>, opts: &ClosedLoopOptions) -> Result<ClosedLoopRun> {
        let t0 = self.solve_t(x0)?.t;
        let mut x = x0.clone();
        let mut time = 0.0;
        let mut t_now = t0;
        let mut samples = vec![ClosedLoopSample {
            time,
            t_local: t0,
            norm: x.norm(),
            u: self.local_control_from(&x, Some(t0))?.u,
        }];
        let mut reached = x.norm() <= opts.x_tol || t_now <= opts.t_tol;
        let mut steps = 0;
        while !reached && steps < opts.max_steps {
            let h = t_now / opts.steps_per_t;
            let field = |x: &DVector<f64>, guess: f64| -> Result<(DVector<f64>, f64)> {
                let c = self.local_control_from(x, Some(guess))?;
                Ok((chain_field(x, c.u), c.t))
            };
            let (k1, _) = field(&x, t_now)?;
            let (k2, _) = field(&(&x + &k1 * (0.5 * h)), t_now)?;
            let (k3, _) = field(&(&x + &k2 * (0.5 * h)), t_now)?;
            let (k4, _) = field(&(&x + &k3 * h), t_now)?;
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            time += h;
            steps += 1;
            let c = self.local_control_from(&x, Some(t_now))?;
            t_now = c.t;
            samples.push(ClosedLoopSample {
                time,
                t_local: t_now,
                norm: x.norm(),
                u: c.u,
            });
            reached = x.norm() <= opts.x_tol || t_now <= opts.t_tol;
        }
        Ok(ClosedLoopRun {
            t0,
            arrival: time,
            reached,
            final_state: x,
            samples,
        })
    }
}

/// `A_c x + B_c u` for the canonical chain.
pub fn chain_field(x: &DVector<f64>, u: f64) -> DVector<f64> {
    let mut dx = DVector::zeros(x.len());
    dx[0] = u;
    for k in 1..x.len() {
        dx[k] = -(k as f64) * x[k - 1];
    }
    dx
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClosedLoopOptions {
    pub steps_per_t: f64,
    /// Stop once `|x| <= x_tol`.
    pub x_tol: f64,
    /// Stop once `T(x) <= t_tol`.
    pub t_tol: f64,
    pub max_steps: usize,
}

impl Default for ClosedLoopOptions {
    fn default() -> Self {
        Self {
            steps_per_t: 100.0,
            x_tol: 1e-6,
            t_tol: 1e-3,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClosedLoopSample {
    pub time: f64,
    pub t_local: f64,
    pub norm: f64,
    pub u: f64,
}

#[derive(Clone, Debug)]
pub struct ClosedLoopRun {
    pub t0: f64,
    /// Elapsed time when the stopping rule fired.
    pub arrival: f64,
    pub reached: bool,
    pub final_state: DVector<f64>,
    pub samples: Vec<ClosedLoopSample>,
}

impl ClosedLoopRun {
    /// `max |T(x(t)) - (T(x0) - t)|` over the samples.
    pub fn max_clock_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.t_local - (self.t0 - s.time)).abs())
            .fold(0.0, f64::max)
    }
}

/// All `LDL^T` pivots of a symmetric rational matrix are positive.
fn rational_positive_definite(m: &[Vec<BigRational>]) -> bool {
    let n = m.len();
    let mut a = m.to_vec();
    for k in 0..n {
        if a[k][k] <= BigRational::zero() {
            return false;
        }
        let pivot_row = a[k].clone();
        for row in a.iter_mut().skip(k + 1) {
            let factor = &row[k] / &pivot_row[k];
            for (v, p) in row.iter_mut().zip(&pivot_row).skip(k) {
                *v -= &factor * p;
            }
        }
    }
    true
}

/// Gauss-Jordan elimination over the rationals.
fn rational_inverse(m: &[Vec<BigRational>]) -> Result<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Invalid("singular rational matrix".into()))?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &factor * p;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_oscillator_hand_values() {
        let c = LocalController::new(1).unwrap();
        let q: Vec<f64> = c.q().iter().cloned().collect();
        assert_eq!(q, vec![0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 12.0]);
        let big: Vec<i64> = c.q_inverse_exact().iter().flatten().map(|v| v.to_i64().unwrap()).collect();
        assert_eq!(big, vec![6, -12, -12, 36]);
        assert_eq!(c.c_frak().as_slice(), &[-3.0, 6.0]);
        assert_eq!(c.kappa_sq_exact(), &BigRational::new(1.into(), 6.into()));
        assert_relative_eq!(c.control_bound(), 0.5, max_relative = 1e-15);

        let m = c.m_frak();
        let mq = DMatrix::from_fn(2, 2, |i, j| (m[i] + m[j]) * c.big_q()[(i, j)]);
        assert_eq!(mq, DMatrix::from_row_slice(2, 2, &[12.0, -36.0, -36.0, 144.0]));
        let (a, b) = canonical_pair(1);
        let s = a + b * c.c_frak().transpose();
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[-3.0, 6.0, -1.0, 0.0]));
        let sq = s.transpose() * c.big_q() + c.big_q() * &s;
        assert_eq!(sq, DMatrix::from_row_slice(2, 2, &[-12.0, 36.0, 36.0, -144.0]));
        assert!(c.lyapunov().strict);
    }

    #[test]
    fn exact_inverse_even_entries() {
        for n in 1..=4 {
            let c = LocalController::new(n).unwrap();
            assert!(c.inverse_is_exact() && c.entries_even(), "N = {n}");
            let q11 = c.big_q()[(0, 0)];
            assert_eq!(q11, (2 * n * (2 * n + 1)) as f64);
            assert!(c.lyapunov().exact_definite, "N = {n}");
        }
    }

    #[test]
    fn delta_properties() {
        assert_eq!(delta(1.0, 2).unwrap().as_slice(), &[1.0; 4]);
        assert_eq!(delta(2.0, 1).unwrap().as_slice(), &[0.5, 0.25]);
        let (s, t) = (1.7, 0.3);
        let lhs = delta(s * t, 2).unwrap();
        let rhs = delta(s, 2).unwrap().component_mul(&delta(t, 2).unwrap());
        assert!((lhs - rhs).amax() < 1e-12);
        assert!(delta(0.0, 1).is_err() && delta(-1.0, 1).is_err());
    }

    #[test]
    fn unit_level_set_has_unit_time() {
        let c = LocalController::new(1).unwrap();
        let v = DVector::from_vec(vec![0.4, -0.9]);
        let x = &v * (c.kappa_sq() / v.dot(&(c.big_q() * &v))).sqrt();
        let tv = c.solve_t(&x).unwrap();
        assert_relative_eq!(tv.t, 1.0, max_relative = 1e-12);
        assert!(tv.residual.abs() <= 1e-12 && tv.slope < 0.0);
        assert!(c.solve_t(&DVector::zeros(2)).unwrap().degenerate);
    }

    #[test]
    fn scaling_law() {
        let c = LocalController::new(2).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.2, 0.05, 0.01]);
        let base = c.solve_t(&x).unwrap();
        let u0 = c.local_control(&x).unwrap().u;
        for s in [0.1, 0.5, 3.0] {
            let scaled = x.component_div(&delta(s, 2).unwrap());
            let tv = c.solve_t(&scaled).unwrap();
            assert_relative_eq!(tv.t, s * base.t, max_relative = 1e-11);
            assert_relative_eq!(c.local_control(&scaled).unwrap().u, u0, max_relative = 1e-9);
        }
    }

    #[test]
    fn closed_loop_single_oscillator() {
        let c = LocalController::new(1).unwrap();
        let x0 = DVector::from_vec(vec![0.3, 0.2]);
        let opts = ClosedLoopOptions {
            t_tol: 0.0,
            ..Default::default()
        };
        let run = c.closed_loop(&x0, &opts).unwrap();
        assert!(run.reached);
        assert!(run.arrival <= run.t0 * (1.0 + 1e-2));
        assert!(run.max_clock_drift() <= 1e-4 * run.t0);
        assert!(run.samples.iter().all(|s| s.u.abs() <= 0.5 + 1e-12));
    }
}
