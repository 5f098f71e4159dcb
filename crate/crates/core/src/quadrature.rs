//! Gauss-Legendre and Gauss-Hermite rules.

use nalgebra::DMatrix;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an `n`-point rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Affine map of a rule on `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Legendre rule on `[-1, 1]`, ascending nodes.
pub fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Rule { nodes, weights }
}

/// Gauss-Hermite rule for the weight `exp(-x^2)`, ascending nodes.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished by
/// Newton on the orthonormal recurrence; weights come from the recurrence.
pub fn gauss_hermite(n: usize) -> Rule {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(f64::total_cmp);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for mut z in guesses {
        let mut weight = 0.0;
        for _ in 0..8 {
            let (p1, pp, log_scale) = hermite_recurrence(n, z);
            weight = (2f64.ln() - 2.0 * pp.abs().ln() - 2.0 * log_scale).exp();
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes.push(z);
        weights.push(weight);
    }
    // enforce exact symmetry
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let w = 0.5 * (weights[n - 1 - i] + weights[i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Orthonormal Hermite polynomial `p_n(z)`, `sqrt(2n) p_{n-1}(z)` and the
/// log of the common scale factor divided out to avoid overflow.
fn hermite_recurrence(n: usize, z: f64) -> (f64, f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > 1e150 {
            p1 *= 1e-150;
            p2 *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (p1, (2.0 * n as f64).sqrt() * p2, log_scale)
}

type Cache = Mutex<HashMap<(bool, usize), Arc<Rule>>>;

fn cached(hermite: bool, n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&(hermite, n)) {
        return r.clone();
    }
    let rule = Arc::new(if hermite { gauss_hermite(n) } else { gauss_legendre(n) });
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert((hermite, n), rule.clone());
    rule
}

/// Shared copy of `gauss_hermite(n)`.
pub fn cached_hermite(n: usize) -> Arc<Rule> {
    cached(true, n)
}

/// Shared copy of `gauss_legendre(n)`.
pub fn cached_legendre(n: usize) -> Arc<Rule> {
    cached(false, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 16, 64, 200] {
            let r = gauss_legendre(n);
            for k in 0..(2 * n).min(40) {
                let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn hermite_moments() {
        for n in [1usize, 4, 20, 64, 128, 512] {
            let r = gauss_hermite(n);
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
            let m0: f64 = r.weights.iter().sum();
            assert_relative_eq!(m0, PI.sqrt(), max_relative = 1e-13);
            if n >= 3 {
                let m4: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
                assert_relative_eq!(m4, 0.75 * PI.sqrt(), max_relative = 1e-12);
            }
        }
    }
}
