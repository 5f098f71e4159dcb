//! The Fuss-Catalan function `T_p`, defined by `z T^p - T + 1 = 0` and `T(0) = 1`.
//!
//! `T_p` is analytic on the plane cut along `[b, +inf)` with branch point
//! `b = (p-1)^(p-1) / p^p`. Real arguments use a bracketed Newton solve,
//! complex ones a Newton polish of the series near 0, of the large-`|z|`
//! asymptotics far out, and arc continuation from the negative axis in between.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Number of series terms used near the origin.
pub const SERIES_TERMS: usize = 40;

/// Points closer than this to `[b, +inf)` are rejected.
pub const CUT_TOLERANCE: f64 = 1e-8;

/// Relative residual accepted for `z T^p - T + 1`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 60;
const CONTINUATION_BUDGET: usize = 100_000;
const MAX_HALVINGS: usize = 40;

/// Interaction half-order `p >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FussCatalanParams {
    p: u32,
}

impl FussCatalanParams {
    pub fn new(p: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidParameter(format!("p must be >= 2, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(self) -> u32 {
        self.p
    }

    pub fn cut_geometry(self) -> CutGeometry {
        CutGeometry { p: self.p }
    }
}

/// Location of the cut of `T_p` and of the cut rays of `u -> T_p(-lambda u^(2p-2))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutGeometry {
    p: u32,
}

impl CutGeometry {
    /// `b = (p-1)^(p-1) / p^p`.
    pub fn branch_point(&self) -> f64 {
        branch_point(self.p)
    }

    /// The `2p-2` angles `(pi - arg lambda)/(2p-2) + k pi/(p-1)`, `k = -p+2 ..= p-1`.
    pub fn ray_angles(&self, lambda: Complex64) -> Vec<f64> {
        let p = self.p as i64;
        let s = (2 * p - 2) as f64;
        let base = (PI - lambda.arg()) / s;
        (-p + 2..=p - 1)
            .map(|k| base + k as f64 * PI / (p - 1) as f64)
            .collect()
    }

    /// Modulus at which every cut ray starts; infinite for `lambda = 0`.
    pub fn ray_start_radius(&self, lambda: Complex64) -> f64 {
        let m = lambda.norm();
        if m == 0.0 {
            return f64::INFINITY;
        }
        let p = self.p as f64;
        let s = 2.0 * p - 2.0;
        m.powf(-1.0 / s) * (p - 1.0).sqrt() / p.powf(p / s)
    }

    /// Distance from `u` to the union of the cut rays for coupling `lambda`.
    pub fn cut_distance(&self, lambda: Complex64, u: Complex64) -> f64 {
        if lambda.norm() == 0.0 {
            return f64::INFINITY;
        }
        let rho = self.ray_start_radius(lambda);
        self.ray_angles(lambda)
            .into_iter()
            .map(|theta| {
                let dir = Complex64::from_polar(1.0, theta);
                let along = (u * dir.conj()).re;
                if along >= rho {
                    (u * dir.conj()).im.abs()
                } else {
                    (u - dir * rho).norm()
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn branch_point(p: u32) -> f64 {
    let p = p as f64;
    (p - 1.0).powf(p - 1.0) / p.powf(p)
}

/// Distance from `u` to the cut rays of `h_lambda`.
pub fn fc_cut_distance(params: FussCatalanParams, lambda: Complex64, u: Complex64) -> f64 {
    params.cut_geometry().cut_distance(lambda, u)
}

/// Exact series coefficients `c_0 ..= c_{n_max}` of `T_p`.
///
/// Obtained by iterating `T <- 1 + z T^p` on truncated series; the
/// coefficients are the integers `binom(pn, n) / ((p-1)n + 1)`.
pub fn fc_series_coeffs(params: FussCatalanParams, n_max: usize) -> Vec<BigUint> {
    let len = n_max + 1;
    let mut t = vec![BigUint::zero(); len];
    t[0] = BigUint::one();
    for _ in 0..len {
        let mut power = t.clone();
        for _ in 1..params.p {
            power = truncated_product(&power, &t, len);
        }
        let mut next = vec![BigUint::zero(); len];
        next[0] = BigUint::one();
        for k in 1..len {
            next[k] = power[k - 1].clone();
        }
        t = next;
    }
    t
}

fn truncated_product(a: &[BigUint], b: &[BigUint], len: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); len];
    for (i, ai) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
        for (j, bj) in b.iter().enumerate().take(len - i) {
            if !bj.is_zero() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// `T_p(z)` on the principal branch.
pub fn fc_eval(params: FussCatalanParams, z: Complex64) -> Result<Complex64> {
    FussCatalan::new(params).eval(z)
}

/// `E_p(z) = T_p'(z) / T_p(z)`.
pub fn fc_log_deriv(params: FussCatalanParams, z: Complex64) -> Result<Complex64> {
    FussCatalan::new(params).log_deriv(z)
}

/// Value, log-derivative and derivative of the log-derivative at one point.
#[derive(Debug, Clone, Copy)]
pub struct FcDerivs {
    pub t: Complex64,
    pub e: Complex64,
    pub e_prime: Complex64,
}

/// Reusable evaluator holding the floating-point series for one `p`.
#[derive(Debug, Clone)]
pub struct FussCatalan {
    p: u32,
    b: f64,
    asymptotic_radius: f64,
    series: Arc<Vec<f64>>,
}

fn cached_series(params: FussCatalanParams) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<f64>>>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    map.entry(params.p)
        .or_insert_with(|| {
            Arc::new(fc_series_coeffs(params, SERIES_TERMS - 1).iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY)).collect())
        })
        .clone()
}

impl FussCatalan {
    pub fn new(params: FussCatalanParams) -> Self {
        let series = cached_series(params);
        Self {
            p: params.p,
            b: branch_point(params.p),
            asymptotic_radius: 2f64.powi(params.p as i32),
            series,
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn branch_point(&self) -> f64 {
        self.b
    }

    /// Distance from `z` to the cut `[b, +inf)`.
    pub fn cut_distance(&self, z: Complex64) -> f64 {
        if z.re >= self.b {
            z.im.abs()
        } else {
            (z - self.b).norm()
        }
    }

    /// Truncated 40-term series.
    pub fn series(&self, z: Complex64) -> Complex64 {
        self.series
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * z + c)
    }

    /// `|z T^p - T + 1| / (1 + |z T^p|)`.
    pub fn relative_residual(&self, z: Complex64, t: Complex64) -> f64 {
        let ztp = z * t.powu(self.p);
        (ztp - t + 1.0).norm() / (1.0 + ztp.norm())
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let d = self.cut_distance(z);
        if d < CUT_TOLERANCE || !z.is_finite() {
            return Err(Error::CutProximity { re: z.re, im: z.im, distance: d });
        }
        if z.norm() == 0.0 {
            return Ok(Complex64::one());
        }
        let t = if z.im == 0.0 {
            Complex64::new(self.eval_real(z.re)?, 0.0)
        } else if z.norm() <= 0.5 * self.b {
            self.newton(z, self.series(z))
                .ok_or_else(|| Error::NonConvergence(format!("series seed at z = {z}")))?
        } else if z.norm() >= self.asymptotic_radius {
            self.newton(z, self.asymptotic_seed(z))
                .ok_or_else(|| Error::NonConvergence(format!("asymptotic seed at z = {z}")))?
        } else {
            self.continue_along_arc(z)?
        };
        if self.relative_residual(z, t) > RESIDUAL_TOLERANCE {
            return Err(Error::NonConvergence(format!(
                "residual {:e} at z = {z}",
                self.relative_residual(z, t)
            )));
        }
        Ok(t)
    }

    pub fn log_deriv(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_with_log_deriv(z)?.1)
    }

    pub fn eval_with_log_deriv(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let t = self.eval(z)?;
        let w = t.powu(self.p - 1);
        let denom = 1.0 - self.p as f64 * z * w;
        if denom.norm() < 1e-7 {
            return Err(Error::BranchPointProximity { re: z.re, im: z.im });
        }
        Ok((t, w / denom))
    }

    /// `T`, `E` and `dE/dz`.
    pub fn derivs(&self, z: Complex64) -> Result<FcDerivs> {
        let t = self.eval(z)?;
        let p = self.p as f64;
        let w = t.powu(self.p - 1);
        let denom = 1.0 - p * z * w;
        if denom.norm() < 1e-7 {
            return Err(Error::BranchPointProximity { re: z.re, im: z.im });
        }
        let e = w / denom;
        let e_prime = ((p - 1.0) * w * e + p * w * w) / (denom * denom);
        Ok(FcDerivs { t, e, e_prime })
    }

    fn eval_real(&self, x: f64) -> Result<f64> {
        let p = self.p as i32;
        let pf = self.p as f64;
        let f = |t: f64| x * t.powi(p) - t + 1.0;
        let df = |t: f64| pf * x * t.powi(p - 1) - 1.0;
        let (mut lo, mut hi) = if x <= 0.0 { (0.0, 1.0) } else { (1.0, pf / (pf - 1.0)) };
        let mut t = if x.abs() <= 0.5 * self.b {
            self.series(Complex64::new(x, 0.0)).re
        } else if x < 0.0 {
            (-x).powf(-1.0 / pf)
        } else {
            0.5 * (lo + hi)
        };
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        for _ in 0..4 * NEWTON_MAX_ITER {
            let ft = f(t);
            if ft == 0.0 {
                return Ok(t);
            }
            // f is positive to the left of the root on both brackets
            if ft > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let mut next = t - ft / df(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            t = next;
        }
        Err(Error::NonConvergence(format!("real bracket at x = {x}")))
    }

    fn asymptotic_seed(&self, z: Complex64) -> Complex64 {
        let inv_p = 1.0 / self.p as f64;
        let w = (-1.0 / z).powf(inv_p);
        let mut t = w;
        for _ in 0..6 {
            t = w * (1.0 - t).powf(inv_p);
        }
        t
    }

    fn newton(&self, z: Complex64, seed: Complex64) -> Option<Complex64> {
        let p = self.p;
        let pf = p as f64;
        let mut t = seed;
        for _ in 0..NEWTON_MAX_ITER {
            let tp1 = t.powu(p - 1);
            let f = z * tp1 * t - t + 1.0;
            let df = pf * z * tp1 - 1.0;
            let dt = f / df;
            if !dt.is_finite() {
                return None;
            }
            t -= dt;
            if dt.norm() <= 4.0 * f64::EPSILON * t.norm() {
                return Some(t);
            }
        }
        (self.relative_residual(z, t) <= RESIDUAL_TOLERANCE).then_some(t)
    }

    fn newton_short(&self, z: Complex64, seed: Complex64) -> Option<Complex64> {
        let p = self.p;
        let pf = p as f64;
        let mut t = seed;
        for _ in 0..10 {
            let tp1 = t.powu(p - 1);
            let dt = (z * tp1 * t - t + 1.0) / (pf * z * tp1 - 1.0);
            if !dt.is_finite() {
                return None;
            }
            t -= dt;
            if dt.norm() <= 4.0 * f64::EPSILON * t.norm() {
                return Some(t);
            }
        }
        None
    }

    /// Continues from the real point `-|z|` along the circle `|w| = |z|`.
    ///
    /// The cut plane is simply connected, so any path avoiding the cut gives
    /// the principal branch. The arc keeps the distance to the cut shrinking
    /// geometrically as it approaches `z`, so points close to the cut need
    /// only logarithmically many steps.
    fn continue_along_arc(&self, z: Complex64) -> Result<Complex64> {
        let radius = z.norm();
        let target = z.arg();
        let sign = target.signum();
        let mut phi = sign * PI;
        let mut t = Complex64::new(self.eval_real(-radius)?, 0.0);
        let pf = self.p as f64;
        let mut steps = 0usize;
        while phi != target {
            steps += 1;
            if steps > CONTINUATION_BUDGET {
                return Err(Error::NonConvergence(format!("continuation budget at z = {z}")));
            }
            let zk = Complex64::from_polar(radius, phi);
            let w = t.powu(self.p - 1);
            let slope = t * w / (1.0 - pf * zk * w);
            let remaining = (target - phi).abs();
            let mut step = remaining
                .min(0.25 * self.cut_distance(zk) / radius)
                .min(0.2);
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let next_phi = if step >= remaining { target } else { phi - sign * step };
                let zn = Complex64::from_polar(radius, next_phi);
                let zn = if next_phi == target { z } else { zn };
                let predicted = t + slope * (zn - zk);
                if let Some(tn) = self.newton_short(zn, predicted) {
                    if (tn - predicted).norm() <= 0.1 * predicted.norm() {
                        accepted = Some((next_phi, tn));
                        break;
                    }
                }
                step *= 0.5;
            }
            let (next_phi, tn) = accepted
                .ok_or_else(|| Error::NonConvergence(format!("step halving exhausted at z = {z}")))?;
            phi = next_phi;
            t = tn;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fc(p: u32) -> FussCatalan {
        FussCatalan::new(FussCatalanParams::new(p).unwrap())
    }

    fn closed_form(z: Complex64) -> Complex64 {
        2.0 / (1.0 + (1.0 - 4.0 * z).sqrt())
    }

    #[test]
    fn series_coefficients_small_cases() {
        let p2 = FussCatalanParams::new(2).unwrap();
        let p3 = FussCatalanParams::new(3).unwrap();
        let as_u64 = |v: Vec<BigUint>| v.iter().map(|c| c.to_u64().unwrap()).collect::<Vec<_>>();
        assert_eq!(as_u64(fc_series_coeffs(p2, 5)), vec![1, 1, 2, 5, 14, 42]);
        assert_eq!(as_u64(fc_series_coeffs(p3, 4)), vec![1, 1, 3, 12, 55]);
        assert_eq!(as_u64(fc_series_coeffs(p2, 0)), vec![1]);
    }

    #[test]
    fn series_matches_binomial_formula() {
        for p in 2..=6u32 {
            let coeffs = fc_series_coeffs(FussCatalanParams::new(p).unwrap(), 12);
            for (n, c) in coeffs.iter().enumerate() {
                let pn = p as usize * n;
                let mut binom = BigUint::one();
                for k in 0..n {
                    binom = binom * BigUint::from(pn - k) / BigUint::from(k + 1);
                }
                assert_eq!(c * BigUint::from((p as usize - 1) * n + 1), binom, "p={p} n={n}");
            }
        }
    }

    #[test]
    fn rejects_small_p() {
        assert!(FussCatalanParams::new(1).is_err());
    }

    #[test]
    fn known_values() {
        let t = fc(2);
        assert_eq!(t.eval(Complex64::zero()).unwrap(), Complex64::one());
        assert_relative_eq!(t.eval(0.1.into()).unwrap().re, 1.1270166537925831, epsilon = 1e-14);
        assert_relative_eq!(t.eval((-1.0).into()).unwrap().re, 0.6180339887498949, epsilon = 1e-14);
        assert_relative_eq!(t.log_deriv(0.1.into()).unwrap().re, 1.4549722436790282, epsilon = 1e-12);
        assert_relative_eq!(t.log_deriv((-0.1).into()).unwrap().re, 0.7742287263574171, epsilon = 1e-12);
        assert_relative_eq!(t.log_deriv(Complex64::zero()).unwrap().re, 1.0);
        assert_relative_eq!(fc(3).log_deriv(Complex64::zero()).unwrap().re, 1.0);
    }

    #[test]
    fn branch_point_and_rays() {
        let g = FussCatalanParams::new(2).unwrap().cut_geometry();
        assert_relative_eq!(g.branch_point(), 0.25);
        assert_relative_eq!(g.ray_start_radius(1.0.into()), 0.5);
        let angles = g.ray_angles(1.0.into());
        assert_eq!(angles.len(), 2);
        assert_relative_eq!(angles[0], PI / 2.0);
        assert_relative_eq!(angles[1], 3.0 * PI / 2.0);
        assert_relative_eq!(g.cut_distance(1.0.into(), Complex64::zero()), 0.5, epsilon = 1e-15);
        assert!(g.cut_distance(1.0.into(), Complex64::new(0.0, 2.0)) < 1e-15);
        let g3 = FussCatalanParams::new(3).unwrap().cut_geometry();
        assert_eq!(g3.ray_angles(Complex64::new(0.3, 0.2)).len(), 4);
        for x in [-1.0, -0.4, 0.0, 0.5, 1.0] {
            assert!(g3.cut_distance(1.0.into(), x.into()) > 0.0);
        }
    }

    #[test]
    fn cut_is_rejected() {
        let t = fc(2);
        assert!(matches!(t.eval(Complex64::new(1.0, 0.0)), Err(Error::CutProximity { .. })));
        assert!(matches!(t.eval(Complex64::new(3.0, 1e-9)), Err(Error::CutProximity { .. })));
        assert!(t.eval(Complex64::new(3.0, 1e-6)).is_ok());
    }

    #[test]
    fn closed_form_agreement_p2() {
        let t = fc(2);
        for i in 0..60 {
            let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 59.0);
            for j in 0..60 {
                let a = -PI + (j as f64 + 0.5) * 2.0 * PI / 60.0;
                let z = Complex64::from_polar(r, a);
                let v = t.eval(z).unwrap();
                let e = closed_form(z);
                assert!((v - e).norm() <= 1e-12 * e.norm().max(1.0), "z={z} {v} {e}");
            }
        }
    }

    #[test]
    fn continuation_agrees_with_asymptotic_seed() {
        for p in 2..=4u32 {
            let t = fc(p);
            for a in [0.05, 0.7, 2.0, 3.0, -1.2, -0.05] {
                let z = Complex64::from_polar(1.5 * t.asymptotic_radius, a);
                let via_arc = t.continue_along_arc(z).unwrap();
                let direct = t.eval(z).unwrap();
                assert!((via_arc - direct).norm() < 1e-12, "p={p} a={a}");
            }
        }
    }
}
