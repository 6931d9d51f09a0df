//! Matching the stages: the terminal domain `G_Theta = {T(x_c) <= Theta}` must
//! fit inside the strip `|Cx| <= 1/2` (so the lifted terminal control stays
//! admissible), and the reduced stage's stalling region `U C(A,B) Omega` must
//! fit inside `G_Theta` (so the reduced stage hands over to the terminal one).
//!
//! In canonical coordinates `G_Theta` is the ellipsoid
//! `(Q delta(Theta) x_c, delta(Theta) x_c) <= kappa^2`, whose support function
//! in direction `w` is `kappa sqrt((q delta^-1 w, delta^-1 w))`. Both
//! conditions are support-function inequalities against it.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalForm;
use crate::error::{Error, Result};
use crate::geometry::{SupportFn, SupportFunction};
use crate::local::{delta, LocalController};
use crate::singular::halton_gaussian;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingOptions {
    pub theta_margin: f64,
    pub u_margin: f64,
    /// Low-discrepancy sphere probes for the `U` search.
    pub probes: usize,
    /// Best probes refined by local descent.
    pub refine: usize,
}

impl Default for MatchingOptions {
    fn default() -> Self {
        Self {
            theta_margin: 0.05,
            u_margin: 0.1,
            probes: 4096,
            refine: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeStats {
    pub probes: usize,
    pub refined: usize,
    pub evaluations: usize,
    /// Smallest ratio found before the margin and clamp.
    pub min_ratio: f64,
    pub argmin: DVector<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchingPlan {
    pub theta: f64,
    pub u: f64,
    pub c_of_ab: f64,
    pub theta_margin: f64,
    pub u_margin: f64,
    /// Left side of the strip condition at `theta`.
    pub cond_b_lhs: f64,
    pub probe: ProbeStats,
}

/// `kappa sqrt((q delta(theta)^-1 w, delta(theta)^-1 w))`, the support function of `G_theta`.
pub fn g_theta_support(local: &LocalController, theta: f64, w: &DVector<f64>) -> Result<f64> {
    let scaled = w.component_div(&delta(theta, local.n())?);
    Ok(local.kappa() * scaled.dot(&(local.q() * &scaled)).max(0.0).sqrt())
}

/// `max |C x|` over `x = D x_c`, `x_c` in `G_theta`.
pub fn cond_b_lhs(canonical: &CanonicalForm, local: &LocalController, theta: f64) -> Result<f64> {
    let w = canonical.d.transpose() * &canonical.c;
    g_theta_support(local, theta, &w)
}

/// Largest `theta` with `cond_b_lhs = (1 - margin) / 2`.
pub fn choose_theta(canonical: &CanonicalForm, local: &LocalController, margin: f64) -> Result<f64> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::Invalid(format!("theta margin must lie in (0, 1), got {margin}")));
    }
    let target = 0.5 * (1.0 - margin);
    let lhs = |t: f64| cond_b_lhs(canonical, local, t);
    let (mut lo, mut hi) = (1.0, 1.0);
    if lhs(1.0)? > target {
        while lhs(lo)? > target {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Bracket("strip condition".into()));
            }
        }
        hi = 2.0 * lo;
    } else {
        while lhs(hi)? <= target {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Bracket("strip condition: C x vanishes on the canonical chain".into()));
            }
        }
        lo = 0.5 * hi;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if lhs(mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `G_theta` support over `C(A,B) H_Omega(D^-T w)` for a direction `w`.
fn cond_a_ratio(
    canonical: &CanonicalForm,
    local: &LocalController,
    support: &SupportFunction,
    theta: f64,
    c_of_ab: f64,
    w: &DVector<f64>,
) -> Result<f64> {
    let h = support.value(&(canonical.d_inv.transpose() * w));
    if !(h > 0.0) {
        return Err(Error::Invalid("support function of the limit body vanished".into()));
    }
    Ok(g_theta_support(local, theta, w)? / (c_of_ab * h))
}

/// Largest admissible reduced bound for the given `theta`, by probing the
/// sphere and refining the best candidates.
pub fn choose_u(
    canonical: &CanonicalForm,
    local: &LocalController,
    support: &SupportFunction,
    theta: f64,
    c_of_ab: f64,
    opts: &MatchingOptions,
) -> Result<(f64, ProbeStats)> {
    if !(c_of_ab > 0.0) {
        return Err(Error::Invalid(format!("C(A,B) must be positive, got {c_of_ab}")));
    }
    if !(opts.u_margin > 0.0 && opts.u_margin < 1.0) {
        return Err(Error::Invalid(format!("U margin must lie in (0, 1), got {}", opts.u_margin)));
    }
    let dim = local.dim();
    let ratio = |w: &DVector<f64>| cond_a_ratio(canonical, local, support, theta, c_of_ab, w);
    let mut evaluations = 0;
    let mut scored = Vec::with_capacity(opts.probes);
    for k in 0..opts.probes {
        let g = halton_gaussian(k as u64 + 1, dim);
        let norm = g.norm();
        if norm < 1e-12 {
            continue;
        }
        let w = g / norm;
        scored.push((ratio(&w)?, w));
        evaluations += 1;
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let refined = opts.refine.min(scored.len());
    let mut best = scored
        .first()
        .cloned()
        .ok_or_else(|| Error::Invalid("no probes".into()))?;
    for (mut val, mut w) in scored.into_iter().take(refined) {
        // compass search on the sphere
        let mut step = 0.05;
        while step > 1e-9 {
            let mut improved = false;
            for axis in 0..dim {
                for sgn in [1.0, -1.0] {
                    let mut trial = w.clone();
                    trial[axis] += sgn * step;
                    let trial = trial.normalize();
                    let v = ratio(&trial)?;
                    evaluations += 1;
                    if v < val {
                        val = v;
                        w = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if val < best.0 {
            best = (val, w);
        }
    }
    let u = ((1.0 - opts.u_margin) * best.0).min(1.0);
    if !(u > 0.0) {
        return Err(Error::Invalid(format!("reduced bound {u} is not positive")));
    }
    Ok((
        u,
        ProbeStats {
            probes: opts.probes,
            refined,
            evaluations,
            min_ratio: best.0,
            argmin: best.1,
        },
    ))
}

/// `theta` from the strip condition, then `U` from the containment condition.
pub fn plan(
    canonical: &CanonicalForm,
    local: &LocalController,
    support: &SupportFunction,
    c_of_ab: f64,
    opts: &MatchingOptions,
) -> Result<MatchingPlan> {
    let theta = choose_theta(canonical, local, opts.theta_margin)?;
    let (u, probe) = choose_u(canonical, local, support, theta, c_of_ab, opts)?;
    Ok(MatchingPlan {
        theta,
        u,
        c_of_ab,
        theta_margin: opts.theta_margin,
        u_margin: opts.u_margin,
        cond_b_lhs: cond_b_lhs(canonical, local, theta)?,
        probe,
    })
}

/// `x_c` in the closed set `G_theta`.
pub fn in_g_theta(xc: &DVector<f64>, theta: f64, local: &LocalController) -> bool {
    local.within(xc, theta)
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub samples: usize,
    /// Points of `U C(A,B) dOmega` outside `G_theta`.
    pub cond_a_violations: usize,
    /// Boundary points of `G_theta` with `|Cx| > 1/2 + 1e-9`.
    pub cond_b_violations: usize,
    /// Boundary points of `G_theta` with `|u_c| + |Cx| > 1 + 1e-12`.
    pub admissibility_violations: usize,
    pub max_cx: f64,
    /// Largest `g(theta) / kappa^2` over the containment samples.
    pub max_cond_a_level: f64,
}

/// Monte-Carlo check of both conditions.
///
/// Boundary points of `rho Omega` are `rho dH/dp(p)` for random `p`;
/// boundary points of `G_theta` are `delta(theta)^-1 kappa L^-T v` for unit
/// `v` and `Q = L L^T`.
pub fn verify(
    canonical: &CanonicalForm,
    local: &LocalController,
    support: &SupportFunction,
    plan: &MatchingPlan,
    samples: usize,
    seed: u64,
) -> Result<Verification> {
    let dim = local.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = || DVector::from_fn(dim, |_, _| standard_normal(&mut rng));
    let level = plan.u * plan.c_of_ab;
    let kappa_sq = local.kappa_sq();
    let mut out = Verification {
        samples,
        cond_a_violations: 0,
        cond_b_violations: 0,
        admissibility_violations: 0,
        max_cx: 0.0,
        max_cond_a_level: 0.0,
    };
    for _ in 0..samples {
        let p = gaussian();
        let x = support.value_grad(&p).1 * level;
        let xc = canonical.to_canonical(&x);
        let g = local.g(&xc, plan.theta).0 / kappa_sq;
        out.max_cond_a_level = out.max_cond_a_level.max(g);
        if !in_g_theta(&xc, plan.theta, local) {
            out.cond_a_violations += 1;
        }
    }
    for _ in 0..samples {
        let xc = local.level_point(plan.theta, &gaussian().normalize())?;
        let x = canonical.from_canonical(&xc);
        let cx = canonical.c.dot(&x).abs();
        out.max_cx = out.max_cx.max(cx);
        if cx > 0.5 + 1e-9 {
            out.cond_b_violations += 1;
        }
        let uc = local.local_control_from(&xc, Some(plan.theta))?.u;
        if uc.abs() + cx > 1.0 + 1e-12 {
            out.admissibility_violations += 1;
        }
    }
    Ok(out)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
