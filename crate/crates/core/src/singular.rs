//! Singular (attractor) dynamics on the sphere `{H(p) = 1, (p, B) = 0}`.
//!
//! Along a singular arc the switching function `(p, B)` vanishes
//! identically, which forces the control `f(p) = (p, AB) / (B~, B)` with
//! `B~ = (d2H/dp2)^-1 B`, and the momentum follows
//! `p' = -A^T p + B~ f(p)`. At gauge level `rho` the physical control is
//! `rho f`, so singular motions are admissible while `rho max|f| <= 1`.
//! `mu` is the minimum over trajectories of `max |f|`; the band
//! `rho <= 1/mu` is where the high-energy feedback can stall.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SupportFn, SupportFunction};
use crate::highenergy::b_dot;
use crate::model::System;

/// Relative eigenvalue cutoff of the tangential pseudo-inverse.
pub const HESSIAN_CUTOFF: f64 = 1e-10;
/// Minimum `|(B~, B)|` for `f` to be defined.
pub const DENOMINATOR_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct SingularState {
    pub p: DVector<f64>,
    pub f_value: f64,
    pub b_tilde: DVector<f64>,
}

/// `B~ = (d2H/dp2)^-1 B` on the complement of the Hessian kernel.
///
/// The Hessian annihilates `p`, so the solve uses the pseudo-inverse on
/// `p^perp`; the result is then shifted along `p` to be orthogonal to
/// `x = dH/dp(p)`, which keeps `H` constant along `p' = -A^T p + B~ f`.
pub fn btilde(support: &SupportFunction, p: &DVector<f64>) -> Result<DVector<f64>> {
    let dim = p.len();
    let pp = p.norm_squared();
    if pp == 0.0 {
        return Err(Error::ZeroState("singular control"));
    }
    let proj = DMatrix::identity(dim, dim) - p * p.transpose() / pp;
    let hess = support.hessian(p);
    let reduced = &proj * hess * &proj;
    let eig = SymmetricEigen::new(reduced);
    let scale = eig.eigenvalues.amax();
    let b = proj * bvec(dim);
    let mut w0 = DVector::zeros(dim);
    let mut kept = 0;
    for k in 0..dim {
        let lam = eig.eigenvalues[k];
        if lam.abs() > HESSIAN_CUTOFF * scale {
            let v = eig.eigenvectors.column(k);
            w0 += v * (v.dot(&b) / lam);
            kept += 1;
        }
    }
    if kept + 1 < dim {
        return Err(Error::Singular(format!(
            "Hessian has rank {kept} on the tangent space of dimension {}",
            dim - 1
        )));
    }
    let x = support.value_grad(p).1;
    Ok(&w0 - p * (w0.dot(&x) / p.dot(&x)))
}

fn bvec(dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |k, _| (k % 2) as f64)
}

/// `(p, AB)` with `AB = (1, 0, ..., 1, 0)`.
fn ab_dot(p: &DVector<f64>) -> f64 {
    p.iter().step_by(2).sum()
}

/// Singular control `f(p) = (p, AB) / (B~, B)`.
pub fn f_singular(support: &SupportFunction, p: &DVector<f64>) -> Result<f64> {
    Ok(singular_state(support, p)?.f_value)
}

pub fn singular_state(support: &SupportFunction, p: &DVector<f64>) -> Result<SingularState> {
    let b_tilde = btilde(support, p)?;
    let denom = b_dot(&b_tilde);
    if denom.abs() < DENOMINATOR_CUTOFF * b_tilde.norm().max(1.0) {
        return Err(Error::Singular(format!("(B~, B) = {denom:e} below cutoff")));
    }
    Ok(SingularState {
        p: p.clone(),
        f_value: ab_dot(p) / denom,
        b_tilde,
    })
}

/// `p' = -A^T p + B~ f(p)`.
pub fn singular_field(system: &System, support: &SupportFunction, p: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let st = singular_state(support, p)?;
    let drift = -(system.a().transpose() * p);
    Ok((drift + st.b_tilde * st.f_value, st.f_value))
}

/// Returns `p` to `{H = 1, (p, B) = 0}`: minimum-norm Newton steps on both
/// constraints, then exact normalization by `H`.
pub fn project(support: &SupportFunction, p: &DVector<f64>) -> Result<DVector<f64>> {
    let dim = p.len();
    let b = bvec(dim);
    let bb = b.norm_squared();
    let mut q = p - &b * (b_dot(p) / bb);
    for _ in 0..8 {
        let (h, g) = support.value_grad(&q);
        let f1 = h - 1.0;
        let f2 = b_dot(&q);
        if f1.abs() < 1e-13 && f2.abs() < 1e-13 {
            break;
        }
        // J = [g^T; B^T], step = -J^T (J J^T)^-1 F
        let (a11, a12, a22) = (g.norm_squared(), b_dot(&g), bb);
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            return Err(Error::Singular("degenerate constraint Jacobian".into()));
        }
        let l1 = (a22 * f1 - a12 * f2) / det;
        let l2 = (a11 * f2 - a12 * f1) / det;
        q -= &g * l1 + &b * l2;
    }
    let h = support.value(&q);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Singular("projection left the support domain".into()));
    }
    Ok(q / h)
}

/// Quasi-uniform points on the sphere: Halton coordinates, Box-Muller,
/// the `B` component removed, then normalized to `H = 1`.
pub fn seeds(support: &SupportFunction, count: usize) -> Result<Vec<DVector<f64>>> {
    let dim = support.dim();
    let b = bvec(dim);
    let bb = b.norm_squared();
    let mut out = Vec::with_capacity(count);
    let mut index = 1;
    while out.len() < count {
        let g = halton_gaussian(index, dim);
        index += 1;
        let g = &g - &b * (g.dot(&b) / bb);
        if g.norm() < 1e-6 {
            continue;
        }
        out.push(project(support, &g)?);
    }
    Ok(out)
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Gaussian vector from the `index`-th Halton point via Box-Muller.
pub fn halton_gaussian(index: u64, dim: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    let mut k = 0;
    while k < dim {
        let u1 = radical_inverse(index, PRIMES[k % PRIMES.len()]).max(1e-12);
        let u2 = radical_inverse(index, PRIMES[(k + 1) % PRIMES.len()]);
        let r = (-2.0 * u1.ln()).sqrt();
        v[k] = r * (2.0 * PI * u2).cos();
        if k + 1 < dim {
            v[k + 1] = r * (2.0 * PI * u2).sin();
        }
        k += 2;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuOptions {
    pub n_seeds: usize,
    /// Defaults to 50 periods of the slowest oscillator.
    pub horizon: Option<f64>,
    /// Defaults to `1e-3` periods of the fastest oscillator.
    pub step: Option<f64>,
    /// Fraction of the horizon discarded before recording `max |f|`.
    pub burn_in: f64,
    pub epsilon: f64,
}

impl Default for MuOptions {
    fn default() -> Self {
        Self {
            n_seeds: 8,
            horizon: None,
            step: None,
            burn_in: 0.2,
            epsilon: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedRun {
    pub seed: DVector<f64>,
    /// `max |f|` after burn-in; `None` when the run was invalid.
    pub max_abs_f: Option<f64>,
    /// Momentum at the end of the run.
    pub final_p: DVector<f64>,
    pub max_constraint_violation: f64,
    pub max_f_jump: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MuEstimate {
    pub mu_hat: f64,
    pub trajectories_scanned: usize,
    pub per_trajectory_max_f: Vec<Option<f64>>,
    /// `(1 + epsilon) / mu_hat`.
    pub c_of_ab: f64,
    pub epsilon: f64,
    /// Index of the run attaining `mu_hat`.
    pub best: usize,
    pub runs: Vec<SeedRun>,
    /// Set for a single oscillator, whose sphere is two points.
    pub degenerate: bool,
}

impl MuEstimate {
    pub fn mu_inverse(&self) -> f64 {
        1.0 / self.mu_hat
    }
}

/// Integrates one singular trajectory with RK4 and projection after each step.
pub fn run_seed(
    system: &System,
    support: &SupportFunction,
    seed: &DVector<f64>,
    horizon: f64,
    step: f64,
    burn_in: f64,
) -> SeedRun {
    let mut run = SeedRun {
        seed: seed.clone(),
        max_abs_f: None,
        final_p: seed.clone(),
        max_constraint_violation: 0.0,
        max_f_jump: 0.0,
        error: None,
    };
    let steps = (horizon / step).ceil() as usize;
    let h = horizon / steps as f64;
    let start = (burn_in * steps as f64) as usize;
    let mut p = seed.clone();
    let mut max_f: f64 = 0.0;
    let mut prev_f = None;
    let result = (|| -> Result<()> {
        for k in 0..steps {
            let (k1, f) = singular_field(system, support, &p)?;
            if let Some(pf) = prev_f {
                let jump: f64 = f - pf;
                run.max_f_jump = run.max_f_jump.max(jump.abs());
            }
            prev_f = Some(f);
            if k >= start {
                max_f = max_f.max(f.abs());
            }
            let (k2, _) = singular_field(system, support, &(&p + &k1 * (0.5 * h)))?;
            let (k3, _) = singular_field(system, support, &(&p + &k2 * (0.5 * h)))?;
            let (k4, _) = singular_field(system, support, &(&p + &k3 * h))?;
            let next = &p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            p = project(support, &next)?;
            let drift = (support.value(&p) - 1.0).abs().max(b_dot(&p).abs());
            run.max_constraint_violation = run.max_constraint_violation.max(drift);
        }
        let f = f_singular(support, &p)?;
        max_f = max_f.max(f.abs());
        Ok(())
    })();
    run.final_p = p;
    match result {
        Ok(()) => run.max_abs_f = Some(max_f),
        Err(e) => run.error = Some(e.to_string()),
    }
    run
}

/// `mu_hat = min over seeds of max |f|` along singular trajectories.
pub fn estimate_mu(system: &System, support: &SupportFunction, opts: &MuOptions) -> Result<MuEstimate> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::Invalid(format!("epsilon must be positive, got {}", opts.epsilon)));
    }
    if !(0.0..1.0).contains(&opts.burn_in) {
        return Err(Error::Invalid(format!("burn-in fraction must lie in [0, 1), got {}", opts.burn_in)));
    }
    let runs = if system.n() == 1 {
        // {H = 1, eta = 0} is two antipodal fixed points of the singular flow
        let xi = PI / 2.0 * system.omegas()[0];
        [xi, -xi]
            .iter()
            .map(|&v| {
                let p = DVector::from_vec(vec![v, 0.0]);
                let f = f_singular(support, &p);
                SeedRun {
                    seed: p.clone(),
                    max_abs_f: f.as_ref().ok().map(|f| f.abs()),
                    final_p: p,
                    max_constraint_violation: 0.0,
                    max_f_jump: 0.0,
                    error: f.err().map(|e| e.to_string()),
                }
            })
            .collect::<Vec<_>>()
    } else {
        if opts.n_seeds < 8 {
            return Err(Error::Invalid(format!("at least 8 seeds are required, got {}", opts.n_seeds)));
        }
        let horizon = opts.horizon.unwrap_or(50.0 * 2.0 * PI / system.min_omega());
        let step = opts.step.unwrap_or(1e-3 * 2.0 * PI / system.max_omega());
        if !(horizon > 0.0 && step > 0.0) {
            return Err(Error::NonPositiveTime(horizon.min(step)));
        }
        seeds(support, opts.n_seeds)?
            .iter()
            .map(|s| run_seed(system, support, s, horizon, step, opts.burn_in))
            .collect()
    };

    let per: Vec<Option<f64>> = runs.iter().map(|r| r.max_abs_f).collect();
    let (best, mu_hat) = per
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Singular("every singular trajectory failed".into()))?;
    if !(mu_hat > 0.0) {
        return Err(Error::Singular(format!("non-positive mu estimate {mu_hat}")));
    }
    Ok(MuEstimate {
        mu_hat,
        trajectories_scanned: runs.len(),
        per_trajectory_max_f: per,
        c_of_ab: (1.0 + opts.epsilon) / mu_hat,
        epsilon: opts.epsilon,
        best,
        runs,
        degenerate: system.n() == 1,
    })
}
