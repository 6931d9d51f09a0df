//! Reduction of the oscillator system to the canonical chain
//! `x' = A_c x + B_c u` with `A_c` lower-bidiagonal (subdiagonal `-1, ..., -(2N-1)`)
//! and `B_c = e_1`, by the feedback `u -> u - C x` and the coordinate change
//! `x = D x_c`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::System;

/// Condition number of `D` above which a warning is attached.
pub const CONDITION_WARNING: f64 = 1e8;

/// Feedback row `C = (c_1, 0, c_2, 0, ...)` with
/// `c_k = (-1)^{N+1} w_k^{2N} prod_{i != k} (w_i^2 - w_k^2)^{-1}`.
pub fn feedback_c(omegas: &[f64]) -> Result<DVector<f64>> {
    let n = omegas.len();
    let mut c = DVector::zeros(2 * n);
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    for (k, &wk) in omegas.iter().enumerate() {
        let wk2 = wk * wk;
        let mut ck = sign * wk2.powi(n as i32);
        for (i, &wi) in omegas.iter().enumerate() {
            if i != k {
                let gap = wi * wi - wk2;
                if gap == 0.0 {
                    return Err(Error::DuplicateFrequency {
                        first: k.min(i),
                        second: k.max(i),
                    });
                }
                ck /= gap;
            }
        }
        c[2 * k] = ck;
    }
    Ok(c)
}

/// The canonical pair for `N` oscillators.
pub fn canonical_pair(n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let dim = 2 * n;
    let mut a = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        a[(k, k - 1)] = -(k as f64);
    }
    let mut b = DVector::zeros(dim);
    b[0] = 1.0;
    (a, b)
}

/// Columns `e_i = (-1)^{i-1} / (i-1)! (A + BC)^{i-1} B`.
pub fn gauge_d_basis(system: &System, c: &DVector<f64>) -> DMatrix<f64> {
    let dim = system.dim();
    let closed = system.a() + system.b() * c.transpose();
    let mut d = DMatrix::zeros(dim, dim);
    let mut v = system.b().clone();
    let mut coef = 1.0;
    for i in 0..dim {
        d.set_column(i, &(&v * coef));
        v = &closed * v;
        coef *= -1.0 / (i + 1) as f64;
    }
    d
}

/// Closed-form block construction of `D`.
///
/// Block `(i, j)` is `s_{j-1}^{(i)} [[0, -1/(2j-1)!], [1/(2j-2)!, 0]]`, where
/// `s_k^{(i)}` is the `k`-th elementary symmetric polynomial of the squared
/// frequencies other than `w_i` (`s_0 = 1`, `s_1 = lambda_i`).
pub fn gauge_d_blocks(omegas: &[f64]) -> DMatrix<f64> {
    let n = omegas.len();
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let others: Vec<f64> = omegas
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, w)| w * w)
            .collect();
        let sym = elementary_symmetric(&others);
        for j in 1..=n {
            let s = sym[j - 1];
            d[(2 * i, 2 * j - 1)] = -s / factorial(2 * j - 1);
            d[(2 * i + 1, 2 * j - 2)] = s / factorial(2 * j - 2);
        }
    }
    d
}

/// Block construction with `(-1)^{j-1} lambda_i^{j-1}` in place of the symmetric
/// polynomials. Coincides with [`gauge_d_basis`] only for `N = 1`; kept to
/// document the discrepancy.
pub fn gauge_d_literal(omegas: &[f64]) -> DMatrix<f64> {
    let n = omegas.len();
    let lambdas = lambdas(omegas);
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 1..=n {
            let s = (-1f64).powi(j as i32 - 1) * lambdas[i].powi(j as i32 - 1);
            d[(2 * i, 2 * j - 1)] = -s / factorial(2 * j - 1);
            d[(2 * i + 1, 2 * j - 2)] = s / factorial(2 * j - 2);
        }
    }
    d
}

/// `lambda_k = sum_{i != k} w_i^2`.
pub fn lambdas(omegas: &[f64]) -> Vec<f64> {
    let total: f64 = omegas.iter().map(|w| w * w).sum();
    omegas.iter().map(|w| total - w * w).collect()
}

/// `[e_0, e_1, ..., e_m]` of the given values.
fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 2];
    e[0] = 1.0;
    for (count, &v) in values.iter().enumerate() {
        for k in (1..=count + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

#[derive(Clone, Debug, Serialize)]
pub struct CanonicalResiduals {
    /// `max|D^-1 (A + BC) D - A_c| / max(1, max|A_c|)`.
    pub reduction_a: f64,
    /// `max|D^-1 B - B_c|`.
    pub reduction_b: f64,
    /// Relative max difference between the block and basis constructions.
    pub blocks_vs_basis: f64,
    /// Same for the literal block formula; large for `N >= 2`.
    pub literal_blocks_vs_basis: f64,
    pub inverse: f64,
    pub condition_number: f64,
}

#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub c: DVector<f64>,
    pub d: DMatrix<f64>,
    pub d_inv: DMatrix<f64>,
    pub a_frak: DMatrix<f64>,
    pub b_frak: DVector<f64>,
    pub lambdas: Vec<f64>,
    pub condition_number: f64,
    system: System,
}

impl CanonicalForm {
    pub fn new(system: &System) -> Result<Self> {
        let c = feedback_c(system.omegas())?;
        let d = gauge_d_blocks(system.omegas());
        let basis = gauge_d_basis(system, &c);
        let disagreement = rel_max_diff(&d, &basis);
        if disagreement > 1e-8 {
            return Err(Error::Canonical(format!(
                "block and basis constructions of D differ by {disagreement:e}"
            )));
        }
        let d_inv = d
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Canonical("gauge matrix D is singular".into()))?;
        let sv = d.singular_values();
        let condition_number = sv.max() / sv.min();
        let (a_frak, b_frak) = canonical_pair(system.n());
        Ok(Self {
            c,
            d,
            d_inv,
            a_frak,
            b_frak,
            lambdas: lambdas(system.omegas()),
            condition_number,
            system: system.clone(),
        })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn to_canonical(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.d_inv * x
    }

    pub fn from_canonical(&self, xc: &DVector<f64>) -> DVector<f64> {
        &self.d * xc
    }

    /// Physical control `u = u_c + C x` for a canonical control `u_c`.
    pub fn control_lift(&self, u_canonical: f64, x: &DVector<f64>) -> f64 {
        u_canonical + self.c.dot(x)
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.condition_number > CONDITION_WARNING {
            vec![format!(
                "gauge matrix D is ill-conditioned (condition number {:e})",
                self.condition_number
            )]
        } else {
            Vec::new()
        }
    }

    pub fn residuals(&self) -> CanonicalResiduals {
        let closed = self.system.a() + self.system.b() * self.c.transpose();
        let reduced = &self.d_inv * closed * &self.d;
        let scale = self.a_frak.amax().max(1.0);
        let basis = gauge_d_basis(&self.system, &self.c);
        let dim = self.system.dim();
        CanonicalResiduals {
            reduction_a: (reduced - &self.a_frak).amax() / scale,
            reduction_b: (&self.d_inv * self.system.b() - &self.b_frak).amax(),
            blocks_vs_basis: rel_max_diff(&self.d, &basis),
            literal_blocks_vs_basis: rel_max_diff(&gauge_d_literal(self.system.omegas()), &basis),
            inverse: (&self.d_inv * &self.d - DMatrix::identity(dim, dim)).amax(),
            condition_number: self.condition_number,
        }
    }
}

fn rel_max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}
