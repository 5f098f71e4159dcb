//! Keyhole contour and holomorphic functional calculus.
//!
//! The contour is the positively oriented boundary of
//! `D = {|u| < r} ∪ {|u| < R, min(|arg u|, |pi - arg u|) < psi}`:
//! a disk joined to two thin sectors around the real axis. Integrals are
//! normalised with `1/(2 pi i)`, so `holo_apply(id)` reproduces the matrix.

use crate::error::{Error, Result};
use crate::fuss_catalan::FussCatalanParams;
use crate::matrix_core::{CMatrix, SpectralData};
use crate::quadrature::{gauss_legendre, Rule};
use crate::scalar_maps::Coupling;
use num_complex::Complex64;
use num_traits::Zero;
use std::f64::consts::PI;

pub const PANEL_ORDER: usize = 16;
pub const CAUCHY_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_NODES: usize = 256;
const INITIAL_ALPHA: f64 = 0.5;
const MAX_REFINEMENTS: usize = 4;

/// Quadrature point `u` with complex weight `du` (tangent times weight).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourNode {
    pub u: Complex64,
    pub du: Complex64,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Arc { radius: f64, from: f64, to: f64 },
    Segment { a: Complex64, b: Complex64 },
}

impl Piece {
    fn point(&self, t: f64) -> Complex64 {
        match *self {
            Piece::Arc { radius, from, to } => Complex64::from_polar(radius, from + (to - from) * t),
            Piece::Segment { a, b } => a + (b - a) * t,
        }
    }

    fn tangent(&self, t: f64) -> Complex64 {
        match *self {
            Piece::Arc { radius, from, to } => {
                Complex64::i() * (to - from) * Complex64::from_polar(radius, from + (to - from) * t)
            }
            Piece::Segment { a, b } => b - a,
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Piece::Arc { radius, from, to } => radius * (to - from).abs(),
            Piece::Segment { a, b } => (b - a).norm(),
        }
    }

    fn distance(&self, x: Complex64) -> f64 {
        match *self {
            Piece::Arc { radius, from, to } => {
                let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
                let mut ang = x.arg();
                while ang < lo {
                    ang += 2.0 * PI;
                }
                if ang <= hi && x.norm() > 0.0 {
                    (x.norm() - radius).abs()
                } else {
                    (x - self.point(0.0)).norm().min((x - self.point(1.0)).norm())
                }
            }
            Piece::Segment { a, b } => {
                let d = b - a;
                let t = (((x - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                (x - (a + d * t)).norm()
            }
        }
    }
}

/// The quadrature contour with its geometric parameters.
#[derive(Debug, Clone)]
pub struct KeyholeContour {
    outer_radius: f64,
    inner_radius: f64,
    half_angle: f64,
    lambda: Complex64,
    p: u32,
    pieces: Vec<Piece>,
    nodes: Vec<ContourNode>,
}

impl KeyholeContour {
    /// Contour enclosing `[-spectral_radius, spectral_radius]` and avoiding the cut rays of `h_lambda`.
    ///
    /// `R = max(2 spectral_radius, 2r)`, `r = min(1, 0.8 rho_0)` with `rho_0` the
    /// start radius of the cut rays, `psi = min(epsilon/2, gap/2)` where `gap` is
    /// the angular distance between the real axis and the nearest cut ray.
    /// Panels are refined until each half-length is at most `alpha` times the
    /// distance to the enclosed segment and the cut rays.
    pub fn build(spectral_radius: f64, c: &Coupling, n_nodes: usize) -> Result<Self> {
        if !(spectral_radius >= 0.0) || !spectral_radius.is_finite() {
            return Err(Error::InvalidParameter(format!("spectral radius {spectral_radius}")));
        }
        if n_nodes < 64 {
            return Err(Error::InvalidParameter(format!("n_nodes must be >= 64, got {n_nodes}")));
        }
        let geometry = FussCatalanParams::new(c.p())?.cut_geometry();
        let lambda = c.lambda();
        let rho0 = geometry.ray_start_radius(lambda);
        let inner_radius = (0.8 * rho0).min(1.0);
        let outer_radius = (2.0 * spectral_radius).max(2.0 * inner_radius);
        let gap = if c.is_degenerate() {
            f64::INFINITY
        } else {
            geometry
                .ray_angles(lambda)
                .into_iter()
                .map(|a| {
                    let m = a.rem_euclid(PI);
                    m.min(PI - m)
                })
                .fold(f64::INFINITY, f64::min)
        };
        let half_angle = (0.5 * c.epsilon()).min(0.5 * gap).min(0.25 * PI);
        if !(half_angle > 1e-12) {
            return Err(Error::CutCollision(format!("angular gap {gap} leaves no opening")));
        }
        let (rr, r, psi) = (outer_radius, inner_radius, half_angle);
        let pieces = vec![
            Piece::Arc { radius: rr, from: -psi, to: psi },
            Piece::Segment { a: Complex64::from_polar(rr, psi), b: Complex64::from_polar(r, psi) },
            Piece::Arc { radius: r, from: psi, to: PI - psi },
            Piece::Segment { a: Complex64::from_polar(r, PI - psi), b: Complex64::from_polar(rr, PI - psi) },
            Piece::Arc { radius: rr, from: PI - psi, to: PI + psi },
            Piece::Segment { a: Complex64::from_polar(rr, PI + psi), b: Complex64::from_polar(r, PI + psi) },
            Piece::Arc { radius: r, from: PI + psi, to: 2.0 * PI - psi },
            Piece::Segment { a: Complex64::from_polar(r, -psi), b: Complex64::from_polar(rr, -psi) },
        ];
        let mut contour = Self {
            outer_radius,
            inner_radius,
            half_angle,
            lambda,
            p: c.p(),
            pieces,
            nodes: Vec::new(),
        };
        let mut alpha = INITIAL_ALPHA;
        for _ in 0..=MAX_REFINEMENTS {
            contour.nodes = contour.discretise(n_nodes, alpha);
            if contour.self_test().is_ok() {
                contour.check_cut_clearance()?;
                return Ok(contour);
            }
            alpha *= 0.5;
        }
        contour.self_test()?;
        Ok(contour)
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn nodes(&self) -> &[ContourNode] {
        &self.nodes
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    fn singular_distance(&self, u: Complex64) -> f64 {
        let half = 0.5 * self.outer_radius;
        let seg = if u.re.abs() <= half {
            u.im.abs()
        } else {
            Complex64::new(u.re.abs() - half, u.im).norm()
        };
        if self.lambda == Complex64::zero() {
            return seg;
        }
        let geometry = FussCatalanParams::new(self.p).expect("validated").cut_geometry();
        seg.min(geometry.cut_distance(self.lambda, u))
    }

    fn discretise(&self, n_nodes: usize, alpha: f64) -> Vec<ContourNode> {
        let total: f64 = self.pieces.iter().map(Piece::length).sum();
        let base_panels = n_nodes.div_ceil(PANEL_ORDER).max(8);
        let rule = gauss_legendre(PANEL_ORDER).mapped(0.0, 1.0);
        let mut nodes = Vec::new();
        for piece in &self.pieces {
            let k = ((piece.length() / total * base_panels as f64).ceil() as usize).max(1);
            for i in 0..k {
                self.refine(piece, i as f64 / k as f64, (i + 1) as f64 / k as f64, alpha, &rule, &mut nodes, 0);
            }
        }
        nodes
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        piece: &Piece,
        t0: f64,
        t1: f64,
        alpha: f64,
        rule: &Rule,
        out: &mut Vec<ContourNode>,
        depth: usize,
    ) {
        let mid = 0.5 * (t0 + t1);
        let half_len = 0.5 * piece.length() * (t1 - t0);
        if depth < 40 && half_len > alpha * self.singular_distance(piece.point(mid)) {
            self.refine(piece, t0, mid, alpha, rule, out, depth + 1);
            self.refine(piece, mid, t1, alpha, rule, out, depth + 1);
            return;
        }
        for (s, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = t0 + (t1 - t0) * s;
            out.push(ContourNode { u: piece.point(t), du: piece.tangent(t) * (w * (t1 - t0)) });
        }
    }

    /// `(1/(2 pi i)) sum f(u) du`.
    pub fn integrate<F: FnMut(Complex64) -> Complex64>(&self, mut f: F) -> Complex64 {
        let s: Complex64 = self.nodes.iter().map(|n| f(n.u) * n.du).sum();
        s / Complex64::new(0.0, 2.0 * PI)
    }

    /// `sum |f(u)| |du|`.
    pub fn abs_integral<F: FnMut(Complex64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().map(|n| f(n.u) * n.du.norm()).sum()
    }

    /// Winding number of the contour around `a`.
    pub fn cauchy(&self, a: Complex64) -> Complex64 {
        self.integrate(|u| 1.0 / (u - a))
    }

    /// Interior points on the enclosed segment and off it, plus exterior points.
    pub fn self_test(&self) -> Result<()> {
        let half = 0.5 * self.outer_radius;
        let mut interior: Vec<Complex64> = (0..=20).map(|k| Complex64::new(-half + half * k as f64 / 10.0, 0.0)).collect();
        interior.push(Complex64::new(0.0, 0.5 * self.inner_radius));
        interior.push(Complex64::new(0.0, -0.5 * self.inner_radius));
        let exterior = [
            Complex64::new(self.outer_radius + 1.0, 0.0),
            Complex64::new(-self.outer_radius - 1.0, 0.0),
            Complex64::new(0.0, 2.0 * self.inner_radius),
            Complex64::new(0.0, -2.0 * self.inner_radius),
        ];
        for a in interior {
            let err = (self.cauchy(a) - 1.0).norm();
            if !(err <= CAUCHY_TOLERANCE) {
                return Err(Error::QuadratureDivergence(format!("winding at {a} off by {err:e}")));
            }
        }
        for a in exterior {
            let err = self.cauchy(a).norm();
            if !(err <= CAUCHY_TOLERANCE) {
                return Err(Error::QuadratureDivergence(format!("winding at exterior {a} is {err:e}")));
            }
        }
        Ok(())
    }

    fn check_cut_clearance(&self) -> Result<()> {
        if self.lambda == Complex64::zero() {
            return Ok(());
        }
        let geometry = FussCatalanParams::new(self.p)?.cut_geometry();
        for n in &self.nodes {
            if !(geometry.cut_distance(self.lambda, n.u) > 0.0) {
                return Err(Error::CutCollision(format!("node {} on a cut ray", n.u)));
            }
        }
        Ok(())
    }

    /// Exact distance from a real point to the contour.
    pub fn distance_to(&self, x: Complex64) -> f64 {
        self.pieces.iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min)
    }

    /// Minimum distance from the eigenvalues to the contour, checked against `r sin psi`.
    pub fn min_spectrum_distance(&self, eigenvalues: &[f64]) -> Result<f64> {
        let half = 0.5 * self.outer_radius;
        let mut best = f64::INFINITY;
        for &mu in eigenvalues {
            if mu.abs() > half * (1.0 + 1e-12) {
                return Err(Error::SpectrumTooLarge { eig: mu, half_radius: half });
            }
            best = best.min(self.distance_to(Complex64::new(mu, 0.0)));
        }
        let floor = self.inner_radius * self.half_angle.sin();
        if best < floor * (1.0 - 1e-12) {
            return Err(Error::QuadratureDivergence(format!("spectrum distance {best} below r sin psi = {floor}")));
        }
        Ok(best)
    }

    /// Samples `f` at every node.
    pub fn sample<F: FnMut(Complex64) -> Result<Complex64>>(&self, mut f: F) -> Result<Vec<Complex64>> {
        self.nodes.iter().map(|n| f(n.u)).collect()
    }

    /// Verifies that `self` encloses the spectrum with a valid winding at every eigenvalue.
    pub fn check_spectrum(&self, eigenvalues: &[f64]) -> Result<()> {
        self.min_spectrum_distance(eigenvalues)?;
        for &mu in eigenvalues {
            let err = (self.cauchy(Complex64::new(mu, 0.0)) - 1.0).norm();
            if !(err <= CAUCHY_TOLERANCE) {
                return Err(Error::QuadratureDivergence(format!("winding at eigenvalue {mu} off by {err:e}")));
            }
        }
        Ok(())
    }
}

/// `(1/(2 pi i)) ∮ f(u) (u - K)^(-1) du`, evaluated in the eigenbasis of `K`.
pub fn holo_apply<F>(f: F, contour: &KeyholeContour, s: &SpectralData) -> Result<CMatrix>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    contour.check_spectrum(&s.eigenvalues)?;
    let values = contour.sample(f)?;
    let diag: Vec<Complex64> = s
        .eigenvalues
        .iter()
        .map(|&mu| {
            let sum: Complex64 = contour
                .nodes()
                .iter()
                .zip(&values)
                .map(|(n, fv)| fv * n.du / (n.u - mu))
                .sum();
            sum / Complex64::new(0.0, 2.0 * PI)
        })
        .collect();
    Ok(s.reconstruct(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{eigh, sample_gaussian, stream, Beta, EnsembleSpec};
    use crate::scalar_maps::ScalarMaps;
    use approx::assert_relative_eq;

    #[test]
    fn recipe_parameters() {
        let c = Coupling::real(2, 0.1).unwrap();
        let g = KeyholeContour::build(1.0, &c, DEFAULT_NODES).unwrap();
        assert_relative_eq!(g.outer_radius(), 2.0);
        assert_relative_eq!(g.inner_radius(), 1.0);
        assert_relative_eq!(g.half_angle(), 0.1);
        assert!((g.cauchy(Complex64::new(0.3, 0.0)) - 1.0).norm() < 1e-10);
        assert!(g.cauchy(Complex64::new(3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn distance_floor() {
        let c = Coupling::real(2, 0.1).unwrap();
        let g = KeyholeContour::build(1.0, &c, DEFAULT_NODES).unwrap();
        let d = g.min_spectrum_distance(&[0.0]).unwrap();
        assert!(d >= 0.1f64.sin());
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
        let g4 = KeyholeContour::build(2.0, &c, DEFAULT_NODES).unwrap();
        let d = g4.min_spectrum_distance(&[-1.5, 1.5]).unwrap();
        let dense = (0..200_000)
            .map(|k| {
                let n = &g4.nodes()[k % g4.nodes().len()];
                (n.u - 1.5).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(d > 0.0 && d <= dense + 1e-12);
        assert!(matches!(g4.min_spectrum_distance(&[2.5]), Err(Error::SpectrumTooLarge { .. })));
    }

    #[test]
    fn holomorphic_calculus_reproduces_monomials() {
        let c = Coupling::real(2, 0.1).unwrap();
        let s = SpectralData::diagonal(vec![0.5, -0.2]);
        let g = KeyholeContour::build(s.spectral_radius(), &c, DEFAULT_NODES).unwrap();
        let cube = holo_apply(|u| Ok(u * u * u), &g, &s).unwrap();
        assert!((cube[(0, 0)] - Complex64::new(-0.008, 0.0)).norm() < 1e-10);
        assert!((cube[(1, 1)] - Complex64::new(0.125, 0.0)).norm() < 1e-10);
        let spec = EnsembleSpec::new(3, Beta::Two).unwrap();
        let k = sample_gaussian(&spec, &mut stream(1, 0));
        let sd = eigh(&k).unwrap();
        let g = KeyholeContour::build(sd.spectral_radius(), &c, DEFAULT_NODES).unwrap();
        let id = holo_apply(Ok, &g, &sd).unwrap();
        assert!((id - k.matrix()).norm() < 1e-10);
        let maps = ScalarMaps::new(&c);
        let h = holo_apply(|u| maps.h(u), &g, &sd).unwrap();
        let direct: Vec<Complex64> = sd.eigenvalues.iter().map(|&x| maps.h(x.into()).unwrap()).collect();
        assert!((h - sd.reconstruct(&direct)).norm() < 1e-8);
    }

    #[test]
    fn complex_coupling_clearance() {
        for (p, m, a) in [(2u32, 0.1, 2.9), (3, 0.1, -2.3), (4, 0.5, 1.0)] {
            let c = Coupling::polar(p, m, a, 0.2, 1.0).unwrap();
            let g = KeyholeContour::build(3.0, &c, DEFAULT_NODES).unwrap();
            let geom = FussCatalanParams::new(p).unwrap().cut_geometry();
            assert!(g.nodes().iter().all(|n| geom.cut_distance(c.lambda(), n.u) > 0.0));
            let maps = ScalarMaps::new(&c);
            for n in g.nodes() {
                maps.g(n.u).unwrap();
            }
        }
    }
}
