//! The limit support function `h(z) = (2 pi)^-N ∫ |sum z_i cos phi_i| dphi`.
//!
//! One angle is integrated in closed form: for `a >= 0`,
//! `E_phi |a cos phi + s| = (2/pi) (sqrt(a^2 - s^2) + s asin(s/a))` when `|s| < a`
//! and `|s|` otherwise. The angle carrying the largest `|z_i|` is the one
//! removed, leaving a periodic quadrature over `N - 1` angles.
//!
//! For `N = 2` the remaining integral is elementary in complete elliptic
//! integrals: with `m = 4ab / (a + b)^2`, `h(a, b) = (4 / pi^2) (a + b) E(m)`.
//! Its Hessian diverges logarithmically on `a = b`, which a fixed grid cannot
//! resolve, so the tensor-grid scheme uses the closed form there.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    TensorGrid,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub scheme: QuadratureScheme,
    /// Midpoint nodes per angle for the tensor grid.
    pub points_per_axis: usize,
    /// Sample count for Monte-Carlo.
    pub samples: usize,
    pub seed: u64,
    /// When false the Monte-Carlo seed is drawn from the OS.
    pub deterministic: bool,
}

impl QuadratureConfig {
    /// Largest `N` for which the tensor grid is accepted.
    pub const MAX_TENSOR_N: usize = 3;

    pub fn for_dimension(n: usize) -> Self {
        match n {
            0..=2 => Self::tensor(256),
            3 => Self::tensor(96),
            _ => Self::monte_carlo(1_000_000, 0x5eed),
        }
    }

    pub fn tensor(points_per_axis: usize) -> Self {
        Self {
            scheme: QuadratureScheme::TensorGrid,
            points_per_axis,
            samples: 0,
            seed: 0,
            deterministic: true,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self {
            scheme: QuadratureScheme::MonteCarlo,
            points_per_axis: 0,
            samples,
            seed,
            deterministic: true,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::NoFrequencies);
        }
        match self.scheme {
            QuadratureScheme::TensorGrid => {
                if n > Self::MAX_TENSOR_N {
                    return Err(Error::Quadrature(format!(
                        "tensor grid is limited to N <= {}, got N = {n}; use monte-carlo",
                        Self::MAX_TENSOR_N
                    )));
                }
                if self.points_per_axis < 4 {
                    return Err(Error::Quadrature(format!(
                        "points_per_axis must be at least 4, got {}",
                        self.points_per_axis
                    )));
                }
            }
            QuadratureScheme::MonteCarlo => {
                if self.samples == 0 {
                    return Err(Error::Quadrature("monte-carlo needs samples > 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Precomputed quadrature for `h` in dimension `N`.
///
/// Nodes are stored as cosines of the `N - 1` remaining angles, one row per node.
#[derive(Clone, Debug)]
pub struct LimitSupport {
    n: usize,
    cosines: Vec<f64>,
    weights: Vec<f64>,
    elliptic: bool,
}

impl LimitSupport {
    pub fn new(n: usize, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate(n)?;
        let m = n - 1;
        let (cosines, weights) = match cfg.scheme {
            QuadratureScheme::TensorGrid => tensor_nodes(m, cfg.points_per_axis),
            QuadratureScheme::MonteCarlo => {
                let seed = if cfg.deterministic {
                    cfg.seed
                } else {
                    rand::thread_rng().gen()
                };
                monte_carlo_nodes(m, cfg.samples, seed)
            }
        };
        let elliptic = n == 2 && cfg.scheme == QuadratureScheme::TensorGrid;
        Ok(Self {
            n,
            cosines,
            weights,
            elliptic,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    /// Closed-form pair `(a, b) = (|z_1|, |z_2|)` when it applies.
    fn pair(&self, z: &[f64]) -> Option<(f64, f64)> {
        if !self.elliptic {
            return None;
        }
        let (a, b) = (z[0].abs(), z[1].abs());
        (a.min(b) >= ELLIPTIC_RATIO * a.max(b) && a > 0.0).then_some((a, b))
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.n);
        if let Some((a, b)) = self.pair(z) {
            let (_, e) = elliptic_ke(a, b);
            return 4.0 / (PI * PI) * (a + b) * e;
        }
        let Some(split) = Split::new(z) else {
            return 0.0;
        };
        let m = self.n - 1;
        let mut acc = 0.0;
        for (k, &w) in self.weights.iter().enumerate() {
            let s = split.s(&self.cosines[k * m..(k + 1) * m]);
            acc += w * inner_value(split.a, s);
        }
        acc
    }

    /// Value and gradient in one pass. The gradient at `z = 0` is reported as zeros.
    pub fn value_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(z.len(), self.n);
        let mut grad = vec![0.0; self.n];
        if let Some((a, b)) = self.pair(z) {
            let (k, e) = elliptic_ke(a, b);
            let scale = 2.0 / (PI * PI);
            grad[0] = scale * (2.0 * a * e - (a - b) * (e - k)) / a * sign(z[0]);
            grad[1] = scale * (2.0 * b * e - (b - a) * (e - k)) / b * sign(z[1]);
            return (4.0 / (PI * PI) * (a + b) * e, grad);
        }
        let Some(split) = Split::new(z) else {
            return (0.0, grad);
        };
        let m = self.n - 1;
        let mut acc = 0.0;
        let mut ga = 0.0;
        let mut gs = vec![0.0; m];
        for (k, &w) in self.weights.iter().enumerate() {
            let c = &self.cosines[k * m..(k + 1) * m];
            let s = split.s(c);
            let (g, d_a, d_s) = inner_value_grad(split.a, s);
            acc += w * g;
            ga += w * d_a;
            for (j, gj) in gs.iter_mut().enumerate() {
                *gj += w * d_s * c[j];
            }
        }
        grad[split.a_idx] = ga * split.a_sign;
        for (j, &(idx, _, sign)) in split.others.iter().enumerate() {
            grad[idx] = gs[j] * sign;
        }
        (acc, grad)
    }

    /// Analytic Hessian in `z`.
    ///
    /// Second derivatives of the closed-form inner integral carry a
    /// `1/sqrt(a^2 - s^2)` factor, integrable but unbounded.
    pub fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut hess = DMatrix::zeros(n, n);
        if let Some((a, b)) = self.pair(z) {
            // degree-1 homogeneity: hess = c [[b^2, -ab], [-ab, a^2]]
            let (k, e) = elliptic_ke(a, b);
            let c = 2.0 * ((a * a + b * b) * (k - e) - 2.0 * a * b * e) / (PI * PI * a * a * b * b * (a + b));
            let sab = sign(z[0]) * sign(z[1]);
            hess[(0, 0)] = c * b * b;
            hess[(1, 1)] = c * a * a;
            hess[(0, 1)] = -c * a * b * sab;
            hess[(1, 0)] = hess[(0, 1)];
            return hess;
        }
        let Some(split) = Split::new(z) else {
            return hess;
        };
        let m = n - 1;
        let a = split.a;
        let floor = (1e-12 * a) * (1e-12 * a);
        // local index 0 = a, 1..=m = others
        let mut local = DMatrix::<f64>::zeros(n, n);
        for (k, &w) in self.weights.iter().enumerate() {
            let c = &self.cosines[k * m..(k + 1) * m];
            let s = split.s(c);
            let d2 = a * a - s * s;
            if d2 <= 0.0 {
                continue;
            }
            let r = d2.max(floor).sqrt();
            let g_ss = FRAC_2_PI / r;
            let g_as = -FRAC_2_PI * s / (a * r);
            let g_aa = FRAC_2_PI * s * s / (a * a * r);
            local[(0, 0)] += w * g_aa;
            for i in 0..m {
                local[(0, i + 1)] += w * g_as * c[i];
                for j in i..m {
                    local[(i + 1, j + 1)] += w * g_ss * c[i] * c[j];
                }
            }
        }
        let mut map = Vec::with_capacity(n);
        map.push((split.a_idx, split.a_sign));
        map.extend(split.others.iter().map(|&(idx, _, sign)| (idx, sign)));
        for i in 0..n {
            for j in i..n {
                let v = local[(i, j)] * map[i].1 * map[j].1;
                hess[(map[i].0, map[j].0)] = v;
                hess[(map[j].0, map[i].0)] = v;
            }
        }
        hess
    }
}

/// `h(z)` with a freshly built quadrature.
pub fn h_frak(z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    check_finite(z)?;
    Ok(LimitSupport::new(z.len(), cfg)?.value(z))
}

/// Gradient of `h` with a freshly built quadrature; fails at `z = 0`.
pub fn grad_h(z: &[f64], cfg: &QuadratureConfig) -> Result<Vec<f64>> {
    check_finite(z)?;
    if z.iter().all(|&v| v == 0.0) {
        return Err(Error::ConePoint);
    }
    Ok(LimitSupport::new(z.len(), cfg)?.value_grad(z).1)
}

/// Smallest `min(a, b) / max(a, b)` for which the `N = 2` closed form is used;
/// below it the grid integrand is smooth and the closed form loses digits.
const ELLIPTIC_RATIO: f64 = 0.25;

/// `(K(m), E(m))` for `m = 4ab / (a + b)^2`, by the arithmetic-geometric mean
/// started from the complementary modulus `|a - b| / (a + b)`.
fn elliptic_ke(a: f64, b: f64) -> (f64, f64) {
    let sum = a + b;
    let kp = ((a - b).abs() / sum).max(1e-150);
    let m = 4.0 * a * b / (sum * sum);
    let (mut x, mut y) = (1.0f64, kp);
    let mut acc = m / 2.0;
    let mut pow = 1.0;
    for _ in 0..40 {
        let c = 0.5 * (x - y);
        if c.abs() <= 1e-17 * x {
            break;
        }
        let nx = 0.5 * (x + y);
        y = (x * y).sqrt();
        x = nx;
        acc += pow * c * c;
        pow *= 2.0;
    }
    let k = PI / (2.0 * x);
    (k, k * (1.0 - acc))
}

fn check_finite(z: &[f64]) -> Result<()> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("z must be finite".into()));
    }
    Ok(())
}

struct Split {
    a_idx: usize,
    a: f64,
    a_sign: f64,
    /// (index, |z|, sign)
    others: Vec<(usize, f64, f64)>,
}

impl Split {
    fn new(z: &[f64]) -> Option<Self> {
        let mut a_idx = 0;
        for (i, v) in z.iter().enumerate() {
            if v.abs() > z[a_idx].abs() {
                a_idx = i;
            }
        }
        let a = z[a_idx].abs();
        if a == 0.0 {
            return None;
        }
        let others = z
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != a_idx)
            .map(|(i, &v)| (i, v.abs(), sign(v)))
            .collect();
        Some(Self {
            a_idx,
            a,
            a_sign: sign(z[a_idx]),
            others,
        })
    }

    #[inline]
    fn s(&self, cos: &[f64]) -> f64 {
        self.others
            .iter()
            .zip(cos)
            .map(|(&(_, b, _), &c)| b * c)
            .sum()
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn inner_value(a: f64, s: f64) -> f64 {
    let abs = s.abs();
    if abs >= a {
        abs
    } else {
        FRAC_2_PI * ((a * a - s * s).sqrt() + s * (s / a).asin())
    }
}

/// `(G, dG/da, dG/ds)` for the closed-form inner integral.
#[inline]
fn inner_value_grad(a: f64, s: f64) -> (f64, f64, f64) {
    let abs = s.abs();
    if abs >= a {
        (abs, 0.0, sign(s))
    } else {
        let r = (a * a - s * s).sqrt();
        let asin = (s / a).asin();
        (FRAC_2_PI * (r + s * asin), FRAC_2_PI * r / a, FRAC_2_PI * asin)
    }
}

fn tensor_nodes(m: usize, points: usize) -> (Vec<f64>, Vec<f64>) {
    // midpoint rule; cos is symmetric under phi -> 2 pi - phi so an even grid folds in half
    let (axis_cos, axis_w): (Vec<f64>, Vec<f64>) = if points % 2 == 0 {
        (0..points / 2)
            .map(|k| {
                let phi = 2.0 * PI * (k as f64 + 0.5) / points as f64;
                (phi.cos(), 2.0 / points as f64)
            })
            .unzip()
    } else {
        (0..points)
            .map(|k| {
                let phi = 2.0 * PI * (k as f64 + 0.5) / points as f64;
                (phi.cos(), 1.0 / points as f64)
            })
            .unzip()
    };
    let per_axis = axis_cos.len();
    let count = per_axis.pow(m as u32);
    let mut cosines = Vec::with_capacity(count * m);
    let mut weights = Vec::with_capacity(count);
    let mut idx = vec![0usize; m];
    for _ in 0..count {
        let mut w = 1.0;
        for &i in &idx {
            cosines.push(axis_cos[i]);
            w *= axis_w[i];
        }
        weights.push(w);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < per_axis {
                break;
            }
            *slot = 0;
        }
    }
    (cosines, weights)
}

fn monte_carlo_nodes(m: usize, samples: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = if m == 0 { 1 } else { samples };
    let cosines = (0..count * m)
        .map(|_| (rng.gen::<f64>() * 2.0 * PI).cos())
        .collect();
    (cosines, vec![1.0 / count as f64; count])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force periodic trapezoid over all N angles.
    fn brute_force(z: &[f64], points: usize) -> f64 {
        let n = z.len();
        let cos: Vec<f64> = (0..points)
            .map(|k| (2.0 * PI * k as f64 / points as f64).cos())
            .collect();
        let total = points.pow(n as u32);
        let mut acc = 0.0;
        for flat in 0..total {
            let mut rem = flat;
            let mut s = 0.0;
            for zi in z {
                s += zi * cos[rem % points];
                rem /= points;
            }
            acc += s.abs();
        }
        acc / total as f64
    }

    #[test]
    fn single_oscillator_closed_form() {
        let cfg = QuadratureConfig::for_dimension(1);
        assert_relative_eq!(h_frak(&[1.0], &cfg).unwrap(), 2.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(h_frak(&[-3.0], &cfg).unwrap(), 6.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(grad_h(&[3.0], &cfg).unwrap()[0], 2.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(grad_h(&[-2.0], &cfg).unwrap()[0], -2.0 / PI, max_relative = 1e-15);
    }

    #[test]
    fn zero_and_cone_point() {
        let cfg = QuadratureConfig::for_dimension(2);
        assert_eq!(h_frak(&[0.0, 0.0], &cfg).unwrap(), 0.0);
        assert!(matches!(grad_h(&[0.0, 0.0], &cfg), Err(Error::ConePoint)));
    }

    #[test]
    fn two_oscillators_match_brute_force() {
        // frozen from a 2048 x 2048 periodic trapezoid of |cos a + cos b|
        const H11_BRUTE_2048: f64 = 0.810_569_151_247_562_5;
        let cfg = QuadratureConfig::for_dimension(2);
        let v = h_frak(&[1.0, 1.0], &cfg).unwrap();
        assert_relative_eq!(v, H11_BRUTE_2048, max_relative = 1e-4);

        let v = h_frak(&[1.0, 0.5], &cfg).unwrap();
        assert_relative_eq!(v, brute_force(&[1.0, 0.5], 1024), max_relative = 1e-4);
    }

    #[test]
    fn three_oscillators_match_brute_force() {
        let z = [0.7, 1.0, 0.4];
        let cfg = QuadratureConfig::for_dimension(3);
        let v = h_frak(&z, &cfg).unwrap();
        assert_relative_eq!(v, brute_force(&z, 160), max_relative = 5e-4);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let z = [0.3, 1.0, 0.6, 0.8];
        let cfg = QuadratureConfig::monte_carlo(200_000, 7);
        let a = h_frak(&z, &cfg).unwrap();
        let b = h_frak(&z, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_relative_eq!(a, brute_force(&z, 40), max_relative = 1e-2);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = QuadratureConfig::for_dimension(2);
        let lim = LimitSupport::new(2, &cfg).unwrap();
        let step = 1e-5;
        for z in [[1.0, 1.0], [1.0, 0.5], [0.2, 1.3]] {
            let g = lim.value_grad(&z).1;
            for i in 0..2 {
                let mut zp = z;
                let mut zm = z;
                zp[i] += step;
                zm[i] -= step;
                let fd = (lim.value(&zp) - lim.value(&zm)) / (2.0 * step);
                assert!((g[i] - fd).abs() < 1e-3, "z={z:?} i={i} g={} fd={fd}", g[i]);
            }
        }
        // frozen FD of a 2^20-node reference at (1, 1)
        let g = lim.value_grad(&[1.0, 1.0]).1;
        assert!((g[0] - 0.405_284_734_467_104).abs() < 1e-3);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let cfg = QuadratureConfig::for_dimension(2);
        let lim = LimitSupport::new(2, &cfg).unwrap();
        let z = [1.0, 0.6];
        let h = lim.hessian(&z);
        let step = 1e-5;
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += step;
            zm[j] -= step;
            let (gp, gm) = (lim.value_grad(&zp).1, lim.value_grad(&zm).1);
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * step);
                assert!((h[(i, j)] - fd).abs() < 1e-5, "({i},{j}) {} vs {fd}", h[(i, j)]);
            }
        }
        // degree-1 homogeneity puts z in the kernel
        let hz = &h * nalgebra::DVector::from_column_slice(&z);
        assert!(hz.norm() < 1e-12);
    }

    #[test]
    fn two_oscillator_closed_form() {
        let lim = LimitSupport::new(2, &QuadratureConfig::for_dimension(2)).unwrap();
        // E(1) = 1 on the diagonal
        assert_relative_eq!(lim.value(&[1.0, 1.0]), 8.0 / (PI * PI), max_relative = 1e-13);
        assert_relative_eq!(lim.value_grad(&[2.0, 2.0]).1[0], 4.0 / (PI * PI), max_relative = 1e-12);

        // the closed form and the grid agree where the grid integrand is smooth
        let grid = LimitSupport {
            elliptic: false,
            ..lim.clone()
        };
        for z in [[1.0, 0.3], [0.4, 1.0], [1.0, -0.5]] {
            assert_relative_eq!(lim.value(&z), grid.value(&z), max_relative = 1e-12);
            let (g1, g2) = (lim.value_grad(&z).1, grid.value_grad(&z).1);
            for i in 0..2 {
                assert_relative_eq!(g1[i], g2[i], max_relative = 1e-10);
            }
            assert!((lim.hessian(&z) - grid.hessian(&z)).amax() < 1e-8);
        }
        // continuous across the switch between the two evaluations
        let r = ELLIPTIC_RATIO;
        assert_relative_eq!(lim.value(&[1.0, r * (1.0 - 1e-12)]), lim.value(&[1.0, r]), max_relative = 1e-11);
    }

    #[test]
    fn hessian_near_diagonal_matches_finite_differences() {
        let lim = LimitSupport::new(2, &QuadratureConfig::for_dimension(2)).unwrap();
        let z = [1.0, 0.999];
        let h = lim.hessian(&z);
        let step = 1e-7;
        let gp = lim.value_grad(&[z[0], z[1] + step]).1;
        let gm = lim.value_grad(&[z[0], z[1] - step]).1;
        let fd = (gp[1] - gm[1]) / (2.0 * step);
        assert_relative_eq!(h[(1, 1)], fd, max_relative = 1e-5);
        assert!(lim.hessian(&[1.0, 1.0]).amax().is_finite());
    }

    #[test]
    fn euler_identity_and_symmetries() {
        let cfg = QuadratureConfig::for_dimension(3);
        let lim = LimitSupport::new(3, &cfg).unwrap();
        let z = [0.4, -1.1, 0.7];
        let (v, g) = lim.value_grad(&z);
        let euler: f64 = z.iter().zip(&g).map(|(a, b)| a * b).sum();
        assert_relative_eq!(euler, v, max_relative = 1e-12);
        assert_relative_eq!(lim.value(&[0.4, 1.1, -0.7]), v, max_relative = 1e-14);
        assert_relative_eq!(lim.value(&[1.1, 0.7, 0.4]), v, max_relative = 1e-12);
    }

    #[test]
    fn invalid_configs() {
        assert!(LimitSupport::new(4, &QuadratureConfig::tensor(32)).is_err());
        assert!(LimitSupport::new(2, &QuadratureConfig::tensor(2)).is_err());
        assert!(LimitSupport::new(2, &QuadratureConfig::monte_carlo(0, 1)).is_err());
    }
}
