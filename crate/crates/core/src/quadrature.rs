//! Fixed Gaussian quadrature rules.
//!
//! Nodes are found by Newton iteration on the three-term recurrences of the
//! orthogonal polynomials and cached per order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    cached(&LEGENDRE, n, legendre_rule)
}

/// Gauss–Hermite rule for expectations over a standard normal variable:
/// `E[f(Z)] ≈ Σ w_i f(z_i)` with `Σ w_i = 1`.
pub fn gauss_hermite_normal(n: usize) -> Arc<GaussRule> {
    cached(&HERMITE, n, hermite_normal_rule)
}

type Cache = OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>>;

static LEGENDRE: Cache = OnceLock::new();
static HERMITE: Cache = OnceLock::new();

fn cached(cache: &Cache, n: usize, build: fn(usize) -> GaussRule) -> Arc<GaussRule> {
    assert!(n >= 1, "quadrature order must be positive");
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
    guard.entry(n).or_insert_with(|| Arc::new(build(n))).clone()
}

fn legendre_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let prev = z;
            z = prev - p1 / pp;
            if (z - prev).abs() <= 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussRule { nodes, weights }
}

fn hermite_normal_rule(n: usize) -> GaussRule {
    // pi^(-1/4)
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0_f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let prev = z;
            z = prev - p1 / pp;
            if (z - prev).abs() <= 3e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // physicists' rule (weight e^{-x^2}) rescaled to the standard normal
    let sqrt_pi = PI.sqrt();
    let mut nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|v| v / sqrt_pi).collect();
    nodes.reverse();
    weights.reverse();
    GaussRule { nodes, weights }
}

/// Weighted rule for `E[f(X)]` with `X ~ Exp(mean)`, built from an `n`-node
/// Gauss–Legendre rule in the variable `t = ln(1 + scale·X/mean)` on
/// `X/mean ∈ [0, 40]`.
///
/// The logarithmic map resolves integrands that vary on the scale
/// `mean/scale` near the origin, such as `ln(1 + x·P)` at high SNR, where a
/// plain Gauss–Laguerre rule converges slowly. Mass beyond 40 means
/// (`e^-40`) is dropped.
pub fn exponential_expectation_rule(n: usize, mean: f64, scale: f64) -> GaussRule {
    const SPAN: f64 = 40.0;
    let base = gauss_legendre(n);
    let k = scale.max(1e-12);
    let t_max = (k * SPAN).ln_1p();
    let half = 0.5 * t_max;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (u, w) in base.iter() {
        let t = half * (u + 1.0);
        let x = t.exp_m1() / k;
        let jac = t.exp() / k;
        nodes.push(mean * x);
        weights.push(w * half * jac * (-x).exp());
    }
    GaussRule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre(16);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // ∫ x^30 over [-1,1] = 2/31
        let m: f64 = rule.iter().map(|(x, w)| w * x.powi(30)).sum();
        assert!((m - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_matches_normal_moments() {
        for n in [32, 64] {
            let rule = gauss_hermite_normal(n);
            let m0: f64 = rule.weights.iter().sum();
            let m2: f64 = rule.iter().map(|(z, w)| w * z * z).sum();
            let m4: f64 = rule.iter().map(|(z, w)| w * z.powi(4)).sum();
            let m8: f64 = rule.iter().map(|(z, w)| w * z.powi(8)).sum();
            assert!((m0 - 1.0).abs() < 1e-13, "n={n} m0={m0}");
            assert!((m2 - 1.0).abs() < 1e-12);
            assert!((m4 - 3.0).abs() < 1e-11);
            assert!((m8 - 105.0).abs() < 1e-9);
            assert!(rule.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn exponential_rule_moments() {
        for scale in [0.1, 1.0, 100.0, 1e6] {
            let rule = exponential_expectation_rule(64, 2.0, scale);
            let m0: f64 = rule.weights.iter().sum();
            let m1: f64 = rule.iter().map(|(x, w)| w * x).sum();
            assert!((m0 - 1.0).abs() < 1e-12, "scale={scale} m0={m0}");
            assert!((m1 - 2.0).abs() < 1e-11, "scale={scale} m1={m1}");
        }
    }
}
