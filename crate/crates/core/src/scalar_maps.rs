//! Scalar maps of the change of variables `K = H sqrt(1 + lambda H^(2p-2))`.
//!
//! With `z = -lambda u^(2p-2)`:
//! `f(u) = sqrt(T_p(z))`, `h(u) = u f(u)`, `g(u) = h(u) - u`, and the inverse
//! `k(v) = v sqrt(1 + lambda v^(2p-2))`. Square roots are principal.

use crate::error::{Error, Result};
use crate::fuss_catalan::{FussCatalan, FussCatalanParams};
use crate::quadrature::gauss_legendre;
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::f64::consts::PI;

/// Default angular margin used by convenience constructors.
pub const DEFAULT_EPSILON: f64 = 0.2;

const SLACK: f64 = 1e-12;

/// Complex coupling together with its pacman-domain parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    lambda: Complex64,
    epsilon: f64,
    eta: f64,
    p: u32,
}

impl Coupling {
    /// Validates `|lambda| <= eta` and `|arg lambda| <= pi - epsilon`; `lambda = 0` is allowed.
    pub fn new(lambda: Complex64, epsilon: f64, eta: f64, p: u32) -> Result<Self> {
        FussCatalanParams::new(p)?;
        if !(epsilon > 0.0 && epsilon < PI) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0, pi), got {epsilon}")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidCoupling(format!("non-finite lambda {lambda}")));
        }
        if lambda != Complex64::zero() {
            if lambda.norm() > eta * (1.0 + SLACK) {
                return Err(Error::InvalidCoupling(format!("|lambda| = {} exceeds eta = {eta}", lambda.norm())));
            }
            if lambda.arg().abs() > PI - epsilon + SLACK {
                return Err(Error::InvalidCoupling(format!(
                    "|arg lambda| = {} exceeds pi - epsilon = {}",
                    lambda.arg().abs(),
                    PI - epsilon
                )));
            }
        }
        Ok(Self { lambda, epsilon, eta, p })
    }

    /// `lambda = modulus * exp(i arg)`.
    pub fn polar(p: u32, modulus: f64, arg: f64, epsilon: f64, eta: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(modulus, arg), epsilon, eta, p)
    }

    /// Convenience constructor with `epsilon = 0.2` and `eta = max(1, |lambda|)`.
    pub fn with_lambda(p: u32, lambda: Complex64) -> Result<Self> {
        Self::new(lambda, DEFAULT_EPSILON, lambda.norm().max(1.0), p)
    }

    pub fn real(p: u32, lambda: f64) -> Result<Self> {
        Self::with_lambda(p, Complex64::new(lambda, 0.0))
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn params(&self) -> FussCatalanParams {
        FussCatalanParams::new(self.p).expect("validated at construction")
    }

    pub fn is_degenerate(&self) -> bool {
        self.lambda == Complex64::zero()
    }

    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }

    /// Same `epsilon`, `eta` and `p` with another coupling value.
    pub fn with_value(&self, lambda: Complex64) -> Result<Self> {
        Self::new(lambda, self.epsilon, self.eta, self.p)
    }
}

/// Which scalar map to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    F,
    H,
    K,
    G,
}

/// `h`, `h'` and `h''` at one point.
#[derive(Debug, Clone, Copy)]
pub struct HDerivs {
    pub h: Complex64,
    pub h1: Complex64,
    pub h2: Complex64,
}

/// Evaluator of the scalar maps for a fixed `(p, lambda)`.
#[derive(Debug, Clone)]
pub struct ScalarMaps {
    p: u32,
    lambda: Complex64,
    fc: FussCatalan,
}

fn principal_sqrt(a: Complex64, what: &str) -> Result<Complex64> {
    if a.re < 0.0 && a.im.abs() <= 1e-12 * a.norm() {
        return Err(Error::BranchViolation(format!("{what}: sqrt({a})")));
    }
    Ok(a.sqrt())
}

impl ScalarMaps {
    pub fn new(c: &Coupling) -> Self {
        Self::with_lambda(c.params(), c.lambda())
    }

    /// No pacman validation; used where `lambda` ranges beyond the domain (e.g. positivity scans).
    pub fn with_lambda(params: FussCatalanParams, lambda: Complex64) -> Self {
        Self { p: params.p(), lambda, fc: FussCatalan::new(params) }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn fuss_catalan(&self) -> &FussCatalan {
        &self.fc
    }

    fn exponent(&self) -> u32 {
        2 * self.p - 2
    }

    fn is_identity(&self) -> bool {
        self.lambda == Complex64::zero()
    }

    /// `z = -lambda u^(2p-2)`.
    pub fn argument(&self, u: Complex64) -> Complex64 {
        -self.lambda * u.powu(self.exponent())
    }

    pub fn eval(&self, kind: MapKind, u: Complex64) -> Result<Complex64> {
        match kind {
            MapKind::F => self.f(u),
            MapKind::H => self.h(u),
            MapKind::K => self.k(u),
            MapKind::G => self.g(u),
        }
    }

    /// `T_p(-lambda u^(2p-2))`.
    pub fn t(&self, u: Complex64) -> Result<Complex64> {
        if self.is_identity() {
            return Ok(Complex64::one());
        }
        self.fc.eval(self.argument(u))
    }

    pub fn f(&self, u: Complex64) -> Result<Complex64> {
        principal_sqrt(self.t(u)?, "f")
    }

    pub fn h(&self, u: Complex64) -> Result<Complex64> {
        Ok(u * self.f(u)?)
    }

    pub fn k(&self, v: Complex64) -> Result<Complex64> {
        if self.is_identity() {
            return Ok(v);
        }
        let a = 1.0 + self.lambda * v.powu(self.exponent());
        Ok(v * principal_sqrt(a, "k")?)
    }

    /// `k'(v) = (1 + p a) / sqrt(1 + a)` with `a = lambda v^(2p-2)`.
    pub fn k_prime(&self, v: Complex64) -> Result<Complex64> {
        if self.is_identity() {
            return Ok(Complex64::one());
        }
        let a = self.lambda * v.powu(self.exponent());
        Ok((1.0 + self.p as f64 * a) / principal_sqrt(1.0 + a, "k'")?)
    }

    /// `g = h - u`, written as `u z T^p / (f + 1)` to avoid cancellation.
    pub fn g(&self, u: Complex64) -> Result<Complex64> {
        if self.is_identity() {
            return Ok(Complex64::zero());
        }
        let z = self.argument(u);
        let t = self.fc.eval(z)?;
        let f = principal_sqrt(t, "f")?;
        Ok(u * z * t.powu(self.p) / (f + 1.0))
    }

    /// `h`, `h'` and `h''` by the chain rule through `T`, `E` and `E'`.
    pub fn h_derivs(&self, u: Complex64) -> Result<HDerivs> {
        if self.is_identity() {
            return Ok(HDerivs { h: u, h1: Complex64::one(), h2: Complex64::zero() });
        }
        let s = self.exponent();
        let pm1 = self.p as f64 - 1.0;
        let z = self.argument(u);
        let d = self.fc.derivs(z)?;
        let f = principal_sqrt(d.t, "f")?;
        let dz = -(s as f64) * self.lambda * u.powu(s - 1);
        let q = 1.0 + pm1 * z * d.e;
        let h1 = f * q;
        let h2 = f * dz * (0.5 * d.e * q + pm1 * (d.e + z * d.e_prime));
        Ok(HDerivs { h: u * f, h1, h2 })
    }

    pub fn h_prime(&self, u: Complex64) -> Result<Complex64> {
        Ok(self.h_derivs(u)?.h1)
    }

    /// `(g, g')` without cancellation against 1, using `T - 1 = z T^p`.
    pub fn g_g1(&self, u: Complex64) -> Result<(Complex64, Complex64)> {
        if self.is_identity() {
            return Ok((Complex64::zero(), Complex64::zero()));
        }
        let z = self.argument(u);
        let d = self.fc.derivs(z)?;
        let f = principal_sqrt(d.t, "f")?;
        let fm1 = z * d.t.powu(self.p) / (f + 1.0);
        Ok((u * fm1, fm1 + f * (self.p as f64 - 1.0) * z * d.e))
    }

    /// `e_t(u) = E_p(-t u^(2p-2))`.
    pub fn e_t(&self, t: Complex64, u: Complex64) -> Result<Complex64> {
        if t == Complex64::zero() {
            return Ok(Complex64::one());
        }
        self.fc.log_deriv(-t * u.powu(self.exponent()))
    }

    /// `g` as `-1/2 int_0^lambda dt u^(2p-1) e_t(u) f_t(u)` on the straight segment.
    pub fn g_integral_rep(&self, u: Complex64, t_nodes: usize) -> Result<Complex64> {
        if self.is_identity() {
            return Ok(Complex64::zero());
        }
        if t_nodes == 0 {
            return Err(Error::InvalidParameter("t_nodes must be positive".into()));
        }
        let rule = gauss_legendre(t_nodes).mapped(0.0, 1.0);
        let us = u.powu(self.exponent());
        let mut acc = Complex64::zero();
        for (s, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = self.lambda * *s;
            let (tv, e) = self
                .fc
                .eval_with_log_deriv(-t * us)
                .map_err(|err| Error::CutCrossing(format!("{t} ({err})")))?;
            acc += w * e * principal_sqrt(tv, "f_t")?;
        }
        Ok(-0.5 * self.lambda * u * us * acc)
    }

    /// `max(|h(k(z)) - z|, |k(h(z)) - z|)`.
    pub fn inverse_residual(&self, z: Complex64) -> Result<f64> {
        if self.is_identity() {
            return Ok(0.0);
        }
        let a = (self.h(self.k(z)?)? - z).norm();
        let b = (self.k(self.h(z)?)? - z).norm();
        Ok(a.max(b))
    }
}

pub fn eval_map(kind: MapKind, c: &Coupling, u: Complex64) -> Result<Complex64> {
    ScalarMaps::new(c).eval(kind, u)
}

pub fn eval_e(c: &Coupling, t: Complex64, u: Complex64) -> Result<Complex64> {
    ScalarMaps::new(c).e_t(t, u)
}

pub fn g_integral_rep(c: &Coupling, u: Complex64, t_nodes: usize) -> Result<Complex64> {
    ScalarMaps::new(c).g_integral_rep(u, t_nodes)
}

pub fn inverse_residual(c: &Coupling, z: Complex64) -> Result<f64> {
    ScalarMaps::new(c).inverse_residual(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coupling_validation() {
        assert!(Coupling::new(c64(0.1, 0.0), 0.2, 1.0, 2).is_ok());
        assert!(Coupling::new(Complex64::zero(), 0.2, 1.0, 2).unwrap().is_degenerate());
        assert!(matches!(Coupling::new(c64(2.0, 0.0), 0.2, 1.0, 2), Err(Error::InvalidCoupling(_))));
        assert!(matches!(Coupling::polar(2, 0.1, 3.0, 0.2, 1.0), Err(Error::InvalidCoupling(_))));
        assert!(Coupling::polar(2, 0.1, PI - 0.2, 0.2, 1.0).is_ok());
        assert!(Coupling::new(c64(0.1, 0.0), 0.0, 1.0, 2).is_err());
        assert!(Coupling::new(c64(0.1, 0.0), 0.2, 1.0, 1).is_err());
    }

    #[test]
    fn examples() {
        let c = Coupling::real(2, 0.1).unwrap();
        assert_relative_eq!(eval_map(MapKind::K, &c, 1.0.into()).unwrap().re, 1.1f64.sqrt(), epsilon = 1e-15);
        let zero = Coupling::real(3, 0.0).unwrap();
        let z = c64(0.4, -1.3);
        assert_eq!(eval_map(MapKind::H, &zero, z).unwrap(), z);
        assert_eq!(eval_map(MapKind::G, &zero, z).unwrap(), Complex64::zero());
        assert_eq!(eval_e(&c, Complex64::zero(), 3.0.into()).unwrap(), Complex64::one());
        assert_relative_eq!(eval_e(&c, 0.1.into(), 1.0.into()).unwrap().re, 0.7742287263574171, epsilon = 1e-12);
        assert_eq!(eval_e(&c, 0.1.into(), Complex64::zero()).unwrap(), Complex64::one());
    }

    #[test]
    fn integral_representation_matches() {
        let cases = [
            (Coupling::real(2, 0.05).unwrap(), c64(2.0, 0.0)),
            (Coupling::polar(2, 0.05, PI / 2.0, 0.2, 1.0).unwrap(), c64(1.0, 0.5)),
            (Coupling::polar(3, 0.1, -2.5, 0.2, 1.0).unwrap(), c64(-1.2, 0.1)),
        ];
        for (c, u) in cases {
            let direct = eval_map(MapKind::G, &c, u).unwrap();
            let rep = g_integral_rep(&c, u, 64).unwrap();
            assert!((direct - rep).norm() <= 1e-8, "{direct} {rep}");
        }
        assert_eq!(g_integral_rep(&Coupling::real(2, 0.0).unwrap(), c64(1.0, 1.0), 64).unwrap(), Complex64::zero());
    }

    #[test]
    fn inverse_examples() {
        let c = Coupling::real(2, 0.1).unwrap();
        assert!(inverse_residual(&c, 0.7.into()).unwrap() <= 1e-12);
        let c3 = Coupling::polar(3, 0.05, 2.0, 0.2, 1.0).unwrap();
        assert!(inverse_residual(&c3, c64(0.3, -0.2)).unwrap() <= 1e-10);
        assert_eq!(inverse_residual(&Coupling::real(2, 0.0).unwrap(), c64(5.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for (p, lam) in [(2u32, c64(0.1, 0.0)), (3, c64(-0.03, 0.05)), (4, c64(0.02, -0.01))] {
            let m = ScalarMaps::new(&Coupling::with_lambda(p, lam).unwrap());
            for u in [c64(0.7, 0.0), c64(-1.1, 0.2), c64(0.3, -0.4)] {
                let d = m.h_derivs(u).unwrap();
                let eps = 1e-5;
                let fd1 = (m.h(u + eps).unwrap() - m.h(u - eps).unwrap()) / (2.0 * eps);
                let fd2 = (m.h_prime(u + eps).unwrap() - m.h_prime(u - eps).unwrap()) / (2.0 * eps);
                assert!((d.h1 - fd1).norm() <= 1e-8 * d.h1.norm().max(1.0));
                assert!((d.h2 - fd2).norm() <= 1e-7 * d.h2.norm().max(1.0));
                let v = d.h;
                assert!((m.k_prime(v).unwrap() * d.h1 - 1.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn real_lambda_conjugation() {
        let m = ScalarMaps::new(&Coupling::real(3, 0.08).unwrap());
        for u in [c64(0.5, 0.3), c64(-1.0, 0.7), c64(1.4, -0.2)] {
            for kind in [MapKind::F, MapKind::H, MapKind::K, MapKind::G] {
                let a = m.eval(kind, u.conj()).unwrap();
                let b = m.eval(kind, u).unwrap().conj();
                assert!((a - b).norm() <= 1e-14 * b.norm().max(1.0));
            }
        }
    }
}
