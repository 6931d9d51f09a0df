//! The controlled oscillator system `x' = A x + B u`, `|u| <= 1`.
//!
//! State ordering is `(x1, y1, ..., xN, yN)`: each oscillator contributes a
//! position and a velocity, and the scalar control acts on every velocity.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative gap below which two frequencies are reported as nearly coincident.
pub const NEAR_COINCIDENCE_REL: f64 = 1e-6;

/// Default integer bound for the resonance scan.
pub const DEFAULT_RESONANCE_M_MAX: i64 = 5;
/// Default residual tolerance for the resonance scan.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct System {
    omegas: Vec<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl System {
    /// Assembles `A` and `B` for the given frequencies.
    ///
    /// Rejects non-positive or non-finite frequencies and exact duplicates.
    pub fn new(omegas: &[f64]) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::NoFrequencies);
        }
        for (index, &value) in omegas.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveFrequency { index, value });
            }
        }
        for i in 0..omegas.len() {
            for j in (i + 1)..omegas.len() {
                if omegas[i] == omegas[j] {
                    return Err(Error::DuplicateFrequency { first: i, second: j });
                }
            }
        }

        let n = omegas.len();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        let mut b = DVector::zeros(2 * n);
        for (i, &w) in omegas.iter().enumerate() {
            a[(2 * i, 2 * i + 1)] = 1.0;
            a[(2 * i + 1, 2 * i)] = -w * w;
            b[2 * i + 1] = 1.0;
        }
        Ok(Self {
            omegas: omegas.to_vec(),
            a,
            b,
        })
    }

    /// Number of oscillators.
    pub fn n(&self) -> usize {
        self.omegas.len()
    }

    /// State dimension `2N`.
    pub fn dim(&self) -> usize {
        2 * self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn max_omega(&self) -> f64 {
        self.omegas.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_omega(&self) -> f64 {
        self.omegas.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `A x + B u`, written into `out`.
    pub fn field_into(&self, x: &[f64], u: f64, out: &mut [f64]) {
        for (i, &w) in self.omegas.iter().enumerate() {
            out[2 * i] = x[2 * i + 1];
            out[2 * i + 1] = -w * w * x[2 * i] + u;
        }
    }

    /// Per-oscillator energies `omega_i^2 x_i^2 + y_i^2`, conserved by the free flow.
    pub fn block_energies(&self, x: &[f64]) -> Vec<f64> {
        self.omegas
            .iter()
            .enumerate()
            .map(|(i, &w)| w * w * x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1])
            .collect()
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// Human-readable warnings about the frequency set; empty when nothing is suspicious.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let max = self.max_omega();
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                let gap = (self.omegas[i] - self.omegas[j]).abs();
                if gap < NEAR_COINCIDENCE_REL * max {
                    out.push(format!(
                        "omega[{i}] and omega[{j}] nearly coincide (gap {gap:e}); feedback gains will be ill-conditioned"
                    ));
                }
            }
        }
        let report = resonance_report(self, DEFAULT_RESONANCE_M_MAX, DEFAULT_RESONANCE_TOL);
        if let Some(first) = report.near_resonances.first() {
            out.push(format!(
                "near resonance m = {:?} (residual {:e}); the limit reachable-set asymptotics assume no resonance",
                first.m, first.residual
            ));
        }
        out
    }

    /// Rank of the Kalman matrix `[B, AB, ..., A^{2N-1} B]` at relative tolerance `rel_tol`.
    pub fn kalman_rank(&self, rel_tol: f64) -> usize {
        kalman_rank(&self.a, &self.b, rel_tol)
    }
}

/// Rank of `[b, a b, ..., a^{n-1} b]` using singular values relative to the largest one.
pub fn kalman_rank(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> usize {
    let n = b.len();
    let mut k = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        k.set_column(j, &col);
        col = a * &col;
    }
    // Columns grow like omega^j; normalize so the rank test is scale-free.
    for j in 0..n {
        let norm = k.column(j).norm();
        if norm > 0.0 {
            let mut c = k.column_mut(j);
            c /= norm;
        }
    }
    let sv = k.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resonance {
    pub m: Vec<i64>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub is_pairwise_distinct: bool,
    pub near_resonances: Vec<Resonance>,
}

/// Exhaustive scan of integer vectors `m` with `max|m_i| <= m_max` for small `|sum m_i omega_i|`.
///
/// Only one representative of each `{m, -m}` pair is reported (first nonzero entry positive),
/// in lexicographic order.
pub fn resonance_report(system: &System, m_max: i64, tol: f64) -> ResonanceReport {
    let n = system.n();
    let omegas = system.omegas();
    let is_pairwise_distinct = (0..n).all(|i| ((i + 1)..n).all(|j| omegas[i] != omegas[j]));

    let m_max = m_max.max(1);
    let mut found = Vec::new();
    let mut m = vec![-m_max; n];
    loop {
        let first_nonzero = m.iter().find(|&&v| v != 0);
        if matches!(first_nonzero, Some(&v) if v > 0) {
            let residual = m
                .iter()
                .zip(omegas)
                .map(|(&k, &w)| k as f64 * w)
                .sum::<f64>()
                .abs();
            if residual < tol {
                found.push(Resonance {
                    m: m.clone(),
                    residual,
                });
            }
        }
        // odometer increment, last index fastest
        let mut i = n;
        loop {
            if i == 0 {
                return ResonanceReport {
                    is_pairwise_distinct,
                    near_resonances: found,
                };
            }
            i -= 1;
            if m[i] < m_max {
                m[i] += 1;
                break;
            }
            m[i] = -m_max;
        }
    }
}
