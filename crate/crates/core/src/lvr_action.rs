//! Effective action of the representation in the variable `K`, and the
//! eigenbasis operators built from it.
//!
//! With `D_ij = (h(k_i) - h(k_j)) / (k_i - k_j)` (and `D_ii = h'(k_i)`),
//! `S = (1 - beta/2) sum_i log h'(k_i) + (beta/2) sum_ij log D_ij`, which is
//! the log-Jacobian of `K -> H = h(K)`. Tensor operators diagonal in the `K`
//! eigenbasis are stored as `N x N` arrays of their `(i, j)` entries.

use crate::contour::{KeyholeContour, DEFAULT_NODES};
use crate::error::{Error, Result};
use crate::fuss_catalan::FussCatalanParams;
use crate::matrix_core::{eigh, Beta, CMatrix, EnsembleSpec, HermitianMatrix, SpectralData};
use crate::scalar_maps::{Coupling, ScalarMaps};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::f64::consts::PI;

/// Eigenvalue gaps below this use the derivative limit.
pub const COINCIDENCE: f64 = 1e-9;

const TRACK_STEPS: usize = 64;

/// `S = single_trace_part + double_trace_part`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub total: Complex64,
    pub single_trace_part: Complex64,
    pub double_trace_part: Complex64,
}

/// `h` and `h'` on the real axis.
pub trait RealAxisMap {
    fn h_h1(&self, x: f64) -> Result<(Complex64, Complex64)>;
}

impl RealAxisMap for ScalarMaps {
    fn h_h1(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let d = self.h_derivs(Complex64::new(x, 0.0))?;
        Ok((d.h, d.h1))
    }
}

/// Divided differences `D_ij` from values and derivatives at the eigenvalues.
pub fn divided_differences(x: &[f64], h: &[Complex64], h1: &[Complex64]) -> CMatrix {
    let n = x.len();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            h1[i]
        } else if (x[i] - x[j]).abs() < COINCIDENCE {
            0.5 * (h1[i] + h1[j])
        } else {
            (h[i] - h[j]) / (x[i] - x[j])
        }
    })
}

fn action_from_differences(d: &CMatrix, beta: Beta) -> ActionValue {
    action_from_logs(&d.map(|z| z.ln()), beta)
}

fn action_from_logs(l: &CMatrix, beta: Beta) -> ActionValue {
    let b = beta.value();
    let n = l.nrows();
    let diag: Complex64 = (0..n).map(|i| l[(i, i)]).sum();
    let mut off = Complex64::zero();
    for i in 0..n {
        for j in i + 1..n {
            off += l[(i, j)];
        }
    }
    let single = (1.0 - 0.5 * b) * diag;
    let double = 0.5 * b * (diag + 2.0 * off);
    ActionValue { total: single + double, single_trace_part: single, double_trace_part: double }
}

/// Action from eigenvalues; fails on any divided difference in the closed left half-plane.
pub fn action_from_eigenvalues<M: RealAxisMap>(m: &M, x: &[f64], beta: Beta) -> Result<ActionValue> {
    let mut h = Vec::with_capacity(x.len());
    let mut h1 = Vec::with_capacity(x.len());
    for &xi in x {
        let (a, b) = m.h_h1(xi)?;
        h.push(a);
        h1.push(b);
    }
    let d = divided_differences(x, &h, &h1);
    if let Some(z) = d.iter().find(|z| z.re <= 0.0) {
        return Err(Error::LogBranchAmbiguity(format!("divided difference {z} off the principal sheet")));
    }
    Ok(action_from_differences(&d, beta))
}

fn differences_for(maps: &ScalarMaps, x: &[f64]) -> Result<CMatrix> {
    let mut h = Vec::with_capacity(x.len());
    let mut h1 = Vec::with_capacity(x.len());
    for &xi in x {
        let (a, b) = maps.h_h1(xi)?;
        h.push(a);
        h1.push(b);
    }
    Ok(divided_differences(x, &h, &h1))
}

/// Follows every `log D_ij` from `|lambda|` to `lambda` along the arc and
/// reports a winding that the principal log would hide.
fn track_branches(c: &Coupling, x: &[f64], end: &CMatrix) -> Result<()> {
    let lam = c.lambda();
    let params = c.params();
    let theta = lam.arg();
    let mut prev = differences_for(&ScalarMaps::with_lambda(params, Complex64::new(lam.norm(), 0.0)), x)?;
    let mut unwrapped: Vec<f64> = prev.iter().map(|z| z.arg()).collect();
    for k in 1..=TRACK_STEPS {
        let lk = Complex64::from_polar(lam.norm(), theta * k as f64 / TRACK_STEPS as f64);
        let cur = differences_for(&ScalarMaps::with_lambda(params, lk), x)?;
        for (idx, (a, b)) in prev.iter().zip(cur.iter()).enumerate() {
            let step = (b / a).arg();
            if step.abs() > 0.5 * PI {
                return Err(Error::LogBranchAmbiguity(format!("entry {idx} turns by {step} in one tracking step")));
            }
            unwrapped[idx] += step;
        }
        prev = cur;
    }
    for (idx, z) in end.iter().enumerate() {
        if (unwrapped[idx] - z.arg()).abs() > PI {
            return Err(Error::LogBranchAmbiguity(format!(
                "entry {idx} winds to {} but principal argument is {}",
                unwrapped[idx],
                z.arg()
            )));
        }
    }
    Ok(())
}

/// `S(lambda, K)` from the spectral data of `K`.
pub fn action_s(c: &Coupling, spec: &EnsembleSpec, s: &SpectralData) -> Result<ActionValue> {
    check_dim(spec, s)?;
    if c.is_degenerate() {
        return Ok(ActionValue { total: Complex64::zero(), single_trace_part: Complex64::zero(), double_trace_part: Complex64::zero() });
    }
    let maps = ScalarMaps::new(c);
    let x = &s.eigenvalues;
    let mut g = Vec::with_capacity(x.len());
    let mut g1 = Vec::with_capacity(x.len());
    for &xi in x {
        let (a, b) = maps.g_g1(xi.into())?;
        g.push(a);
        g1.push(b);
    }
    let dm1 = divided_differences(x, &g, &g1);
    let d = dm1.map(|z| z + 1.0);
    if d.iter().any(|z| z.re <= 0.0) {
        if c.is_real() {
            return Err(Error::LogBranchAmbiguity("non-positive divided difference at real coupling".into()));
        }
        track_branches(c, x, &d)?;
    }
    Ok(action_from_logs(&dm1.map(ln_1p), spec.beta))
}

/// `log(1 + w)` accurate for small `w`.
fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm() > 1e-2 {
        return (w + 1.0).ln();
    }
    // alternating series, truncation below |w|^11 / 11
    let mut term = w;
    let mut sum = Complex64::zero();
    for k in 1..=10 {
        sum += term / k as f64;
        term *= -w;
    }
    sum
}

fn check_dim(spec: &EnsembleSpec, s: &SpectralData) -> Result<()> {
    if s.dim() != spec.n {
        return Err(Error::InvalidParameter(format!("spectrum has {} eigenvalues, N = {}", s.dim(), spec.n)));
    }
    Ok(())
}

/// `(S1, S2)` with `S1 = (N/2) sum_i log T_p(-lambda k_i^(2p-2))` and `S2 = S - S1` at `beta = 2`.
pub fn action_split(c: &Coupling, s: &SpectralData) -> Result<(Complex64, Complex64)> {
    let spec = EnsembleSpec::new(s.dim(), Beta::Two)?;
    let total = action_s(c, &spec, s)?.total;
    let maps = ScalarMaps::new(c);
    let n = s.dim() as f64;
    let mut s1 = Complex64::zero();
    for &x in &s.eigenvalues {
        s1 += maps.t(x.into())?.ln();
    }
    s1 *= 0.5 * n;
    Ok((s1, total - s1))
}

/// `sum_ij log[D_ij / f(k_j)]`, computed without reference to `S`.
pub fn split_remainder_direct(c: &Coupling, s: &SpectralData) -> Result<Complex64> {
    let maps = ScalarMaps::new(c);
    let d = differences_for(&maps, &s.eigenvalues)?;
    let f: Vec<Complex64> = s.eigenvalues.iter().map(|&x| maps.f(x.into())).collect::<Result<_>>()?;
    let n = s.dim();
    let mut acc = Complex64::zero();
    for i in 0..n {
        for j in 0..n {
            acc += (d[(i, j)] / f[j]).ln();
        }
    }
    Ok(acc)
}

/// Entries of `(1 + Sigma)^(-1)` and the comparison scale `Lambda_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventEntries {
    pub values: CMatrix,
    pub lambda_bounds: DMatrix<f64>,
}

impl ResolventEntries {
    /// `max_ij |values_ij| / Lambda_ij`.
    pub fn bound_ratio(&self) -> f64 {
        self.values
            .iter()
            .zip(self.lambda_bounds.iter())
            .map(|(v, l)| v.norm() / l)
            .fold(0.0, f64::max)
    }
}

/// `M_ij = 1 / D_ij`; the scale uses the eigenvalues of `K`:
/// `Lambda_ij = max(1, |lambda|^(1/2p) |k_i|^(1-1/p), |lambda|^(1/2p) |k_j|^(1-1/p))`.
pub fn resolvent_entries(c: &Coupling, s: &SpectralData) -> Result<ResolventEntries> {
    let maps = ScalarMaps::new(c);
    let d = differences_for(&maps, &s.eigenvalues)?;
    let values = d.map(|z| 1.0 / z);
    let p = c.p() as f64;
    let lam = c.lambda().norm().powf(0.5 / p);
    let scale: Vec<f64> = s.eigenvalues.iter().map(|x| lam * x.abs().powf(1.0 - 1.0 / p)).collect();
    let n = s.dim();
    let lambda_bounds = DMatrix::from_fn(n, n, |i, j| 1f64.max(scale[i]).max(scale[j]));
    Ok(ResolventEntries { values, lambda_bounds })
}

/// Corner operator entries at the contour points `u_k`, `u_k1`.
pub fn corner_operator(c: &Coupling, s: &SpectralData, u_k: Complex64, u_k1: Complex64) -> Result<CMatrix> {
    let m = resolvent_entries(c, s)?.values;
    corner_from_resolvent(&m, &s.eigenvalues, u_k, u_k1)
}

pub(crate) fn corner_from_resolvent(m: &CMatrix, x: &[f64], u_k: Complex64, u_k1: Complex64) -> Result<CMatrix> {
    let inv = |u: Complex64, xi: f64| -> Result<Complex64> {
        let d = u - xi;
        if d.norm() < 1e-12 {
            return Err(Error::PoleCollision(d.norm()));
        }
        Ok(1.0 / d)
    };
    let n = x.len();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        let ai = inv(u_k, x[i])?;
        let bi = inv(u_k1, x[i])?;
        for j in 0..n {
            let aj = inv(u_k, x[j])?;
            let bj = inv(u_k1, x[j])?;
            out[(i, j)] = m[(i, j)] * (ai * bi * aj + ai * aj * bj);
        }
    }
    Ok(out)
}

/// `max_ij |1/(u - k_i) + 1/(u - k_j)|`.
pub fn derivative_corner_norm(s: &SpectralData, u: Complex64) -> f64 {
    let r: Vec<Complex64> = s.eigenvalues.iter().map(|&x| 1.0 / (u - x)).collect();
    let mut best = 0.0f64;
    for a in &r {
        for b in &r {
            best = best.max((a + b).norm());
        }
    }
    best
}

/// `Sigma_ij = D_ij - 1` from the closed form.
pub fn sigma_direct(c: &Coupling, s: &SpectralData) -> Result<CMatrix> {
    let d = differences_for(&ScalarMaps::new(c), &s.eigenvalues)?;
    Ok(d.map(|z| z - Complex64::one()))
}

/// `g` sampled once on a fixed contour; evaluates the `Sigma` and gradient kernels.
#[derive(Debug, Clone)]
pub struct GradientKernel {
    coupling: Coupling,
    contour: KeyholeContour,
    weighted_g: Vec<Complex64>,
}

impl GradientKernel {
    /// Kernel valid for every spectrum inside `[-spectral_radius, spectral_radius]`.
    pub fn new(c: &Coupling, spectral_radius: f64, n_nodes: usize) -> Result<Self> {
        let contour = KeyholeContour::build(spectral_radius, c, n_nodes)?;
        Self::on_contour(c, contour)
    }

    pub fn on_contour(c: &Coupling, contour: KeyholeContour) -> Result<Self> {
        let maps = ScalarMaps::new(c);
        let scale = Complex64::new(0.0, 2.0 * PI).inv();
        let weighted_g = contour
            .nodes()
            .iter()
            .map(|n| Ok(maps.g(n.u)? * n.du * scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coupling: *c, contour, weighted_g })
    }

    pub fn contour(&self) -> &KeyholeContour {
        &self.contour
    }

    pub fn covers(&self, s: &SpectralData) -> bool {
        s.spectral_radius() <= 0.5 * self.contour.outer_radius()
    }

    /// `(1/(2 pi i)) ∮ g(u) / ((u - k_i)^a (u - k_j)) du` for `a = 1` (Sigma) and `a = 2`.
    fn moments(&self, x: &[f64]) -> (CMatrix, CMatrix) {
        let n = x.len();
        let mut sigma = CMatrix::zeros(n, n);
        let mut c2 = CMatrix::zeros(n, n);
        let mut r = vec![Complex64::zero(); n];
        for (node, wg) in self.contour.nodes().iter().zip(&self.weighted_g) {
            for (ri, xi) in r.iter_mut().zip(x) {
                *ri = 1.0 / (node.u - xi);
            }
            for i in 0..n {
                let a = wg * r[i];
                let a2 = a * r[i];
                for j in 0..n {
                    sigma[(i, j)] += a * r[j];
                    c2[(i, j)] += a2 * r[j];
                }
            }
        }
        (sigma, c2)
    }

    /// `Sigma_ij` by contour quadrature.
    pub fn sigma(&self, s: &SpectralData) -> Result<CMatrix> {
        self.contour.check_spectrum(&s.eigenvalues)?;
        Ok(self.moments(&s.eigenvalues).0)
    }

    /// `G_ab = dS/dK_ba`, assembled as `V diag(phi) V^dagger` with
    /// `phi_j = 2 M_jj C_jj + beta sum_{l != j} M_jl C_jl`.
    pub fn gradient(&self, beta: Beta, s: &SpectralData) -> Result<CMatrix> {
        if !self.covers(s) {
            let wider = GradientKernel::new(&self.coupling, s.spectral_radius(), DEFAULT_NODES)?;
            return wider.gradient(beta, s);
        }
        self.contour.check_spectrum(&s.eigenvalues)?;
        if self.coupling.is_degenerate() {
            return Ok(CMatrix::zeros(s.dim(), s.dim()));
        }
        let (sigma, c2) = self.moments(&s.eigenvalues);
        let n = s.dim();
        let b = beta.value();
        let phi: Vec<Complex64> = (0..n)
            .map(|j| {
                let mut acc = 2.0 * c2[(j, j)] / (1.0 + sigma[(j, j)]);
                for l in 0..n {
                    if l != j {
                        acc += b * c2[(j, l)] / (1.0 + sigma[(j, l)]);
                    }
                }
                acc
            })
            .collect();
        Ok(s.reconstruct(&phi))
    }
}

/// `Sigma_ij` on a given contour.
pub fn sigma_contour(c: &Coupling, contour: &KeyholeContour, s: &SpectralData) -> Result<CMatrix> {
    GradientKernel::on_contour(c, contour.clone())?.sigma(s)
}

/// Analytic gradient `G_ab = dS/dK_ba` on a contour fitted to the spectrum.
pub fn action_gradient(c: &Coupling, spec: &EnsembleSpec, s: &SpectralData) -> Result<CMatrix> {
    check_dim(spec, s)?;
    GradientKernel::new(c, s.spectral_radius(), DEFAULT_NODES)?.gradient(spec.beta, s)
}

/// Gradient reassembled from central differences of `S` along the coordinate basis.
pub fn gradient_fd(c: &Coupling, spec: &EnsembleSpec, k: &HermitianMatrix, step: f64) -> Result<CMatrix> {
    let n = spec.n;
    let x0 = spec.to_coordinates(k);
    let mut partial = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[i] += step;
        xm[i] -= step;
        let sp = action_s(c, spec, &eigh(&spec.from_coordinates(&xp))?)?.total;
        let sm = action_s(c, spec, &eigh(&spec.from_coordinates(&xm))?)?.total;
        partial.push((sp - sm) / (2.0 * step));
    }
    let mut g = CMatrix::zeros(n, n);
    let mut idx = 0;
    for a in 0..n {
        g[(a, a)] = partial[idx];
        idx += 1;
    }
    for a in 0..n {
        for b in a + 1..n {
            let x = partial[idx];
            idx += 1;
            let y = if spec.beta == Beta::Two {
                idx += 1;
                partial[idx - 1]
            } else {
                Complex64::zero()
            };
            g[(a, b)] = 0.5 * (x + Complex64::i() * y);
            g[(b, a)] = 0.5 * (x - Complex64::i() * y);
        }
    }
    Ok(g)
}

/// `h(K)` through the eigendecomposition.
pub fn h_of_matrix(maps: &ScalarMaps, k: &HermitianMatrix) -> Result<CMatrix> {
    let s = eigh(k)?;
    let vals: Vec<Complex64> = s.eigenvalues.iter().map(|&x| maps.h(x.into())).collect::<Result<_>>()?;
    Ok(s.reconstruct(&vals))
}

/// Complex-linear coordinates of a (possibly non-Hermitian) matrix in the Hermitian basis.
fn complex_coordinates(spec: &EnsembleSpec, m: &CMatrix) -> Vec<Complex64> {
    let n = spec.n;
    let mut out: Vec<Complex64> = (0..n).map(|a| m[(a, a)]).collect();
    for a in 0..n {
        for b in a + 1..n {
            out.push(0.5 * (m[(a, b)] + m[(b, a)]));
            if spec.beta == Beta::Two {
                out.push((m[(a, b)] - m[(b, a)]) / Complex64::new(0.0, 2.0));
            }
        }
    }
    out
}

/// Determinant of the central-difference Jacobian of `K -> h(K)` on the coordinates of `spec`.
pub fn jacobian_determinant_fd(c: &Coupling, spec: &EnsembleSpec, k: &HermitianMatrix, step: f64) -> Result<Complex64> {
    let maps = ScalarMaps::new(c);
    let x0 = spec.to_coordinates(k);
    let d = x0.len();
    let mut jac = CMatrix::zeros(d, d);
    for col in 0..d {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[col] += step;
        xm[col] -= step;
        let hp = complex_coordinates(spec, &h_of_matrix(&maps, &spec.from_coordinates(&xp))?);
        let hm = complex_coordinates(spec, &h_of_matrix(&maps, &spec.from_coordinates(&xm))?);
        for row in 0..d {
            jac[(row, col)] = (hp[row] - hm[row]) / (2.0 * step);
        }
    }
    Ok(jac.determinant())
}

/// One pairwise factor of the Jacobian at positive coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianFactor {
    pub i: usize,
    pub j: usize,
    pub kind: FactorKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    /// `(h_i - h_j) / (s_i - s_j)` for eigenvalues of opposite sign.
    MixedRatio,
    /// `(1 + lambda sum_k a_i^k a_j^(p-1-k))^(-1)` with `a = s^2 T_p(-lambda s^(2p-2))`.
    SquareRatio,
    /// `(s_i + s_j) / (s_i f_i + s_j f_j)`.
    SumRatio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub overall_positive: bool,
    pub factors: Vec<JacobianFactor>,
    /// Largest relative mismatch between `SquareRatio * SumRatio` and the direct ratio.
    pub consistency: f64,
}

/// Checks every pairwise factor of the Jacobian at real `lambda > 0` (pairs `i <= j`).
pub fn jacobian_check(p: u32, lambda_pos: f64, eigs: &[f64]) -> Result<JacobianReport> {
    if !(lambda_pos > 0.0) || !lambda_pos.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda_pos}")));
    }
    let params = FussCatalanParams::new(p)?;
    let maps = ScalarMaps::with_lambda(params, Complex64::new(lambda_pos, 0.0));
    let mut t = Vec::with_capacity(eigs.len());
    for &s in eigs {
        t.push(maps.t(s.into())?.re);
    }
    let f: Vec<f64> = t.iter().map(|x| x.sqrt()).collect();
    let a: Vec<f64> = eigs.iter().zip(&t).map(|(s, t)| s * s * t).collect();
    let mut factors = Vec::new();
    let mut consistency = 0.0f64;
    for i in 0..eigs.len() {
        for j in i..eigs.len() {
            let (si, sj) = (eigs[i], eigs[j]);
            if si * sj < 0.0 {
                let v = (si * f[i] - sj * f[j]) / (si - sj);
                factors.push(JacobianFactor { i, j, kind: FactorKind::MixedRatio, value: v });
                continue;
            }
            let poly: f64 = (0..p).map(|k| a[i].powi(k as i32) * a[j].powi((p - 1 - k) as i32)).sum();
            let sq = 1.0 / (1.0 + lambda_pos * poly);
            let sum = if si == 0.0 && sj == 0.0 { 1.0 } else { (si + sj) / (si * f[i] + sj * f[j]) };
            factors.push(JacobianFactor { i, j, kind: FactorKind::SquareRatio, value: sq });
            factors.push(JacobianFactor { i, j, kind: FactorKind::SumRatio, value: sum });
            let direct = if (si - sj).abs() < COINCIDENCE {
                maps.h_prime(Complex64::new(0.5 * (si + sj), 0.0))?.re
            } else {
                (si * f[i] - sj * f[j]) / (si - sj)
            };
            consistency = consistency.max((sq * sum - direct).abs() / direct.abs());
        }
    }
    let overall_positive = factors.iter().all(|f| f.value > 0.0 && f.value.is_finite());
    Ok(JacobianReport { overall_positive, factors, consistency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{sample_gaussian, stream};
    use approx::assert_relative_eq;

    fn amax(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn spec(n: usize, beta: Beta) -> EnsembleSpec {
        EnsembleSpec::new(n, beta).unwrap()
    }

    #[test]
    fn degenerate_and_scalar_cases() {
        let zero = Coupling::real(2, 0.0).unwrap();
        let s = SpectralData::diagonal(vec![-0.3, 0.8]);
        assert_eq!(action_s(&zero, &spec(2, Beta::Two), &s).unwrap().total, Complex64::zero());
        let c = Coupling::real(3, 0.07).unwrap();
        let one = SpectralData::diagonal(vec![0.9]);
        let h1 = ScalarMaps::new(&c).h_prime(0.9.into()).unwrap().ln();
        for beta in [Beta::One, Beta::Two] {
            assert_relative_eq!(action_s(&c, &spec(1, beta), &one).unwrap().total.re, h1.re, epsilon = 1e-14);
        }
        let (s1, s2) = action_split(&c, &one).unwrap();
        let t = ScalarMaps::new(&c).t(0.9.into()).unwrap();
        assert_relative_eq!(s1.re, 0.5 * t.ln().re, epsilon = 1e-14);
        assert_relative_eq!(s2.re, h1.re - s1.re, epsilon = 1e-14);
    }

    #[test]
    fn beta_two_has_no_single_trace_part() {
        let c = Coupling::real(2, 0.1).unwrap();
        let s = SpectralData::diagonal(vec![-1.0, 0.2, 0.7]);
        let a = action_s(&c, &spec(3, Beta::Two), &s).unwrap();
        assert_eq!(a.single_trace_part, Complex64::zero());
        assert_eq!(a.total, a.single_trace_part + a.double_trace_part);
    }

    #[test]
    fn exp_action_is_jacobian_determinant() {
        let c = Coupling::real(2, 0.1).unwrap();
        let sp = spec(2, Beta::Two);
        let k = sample_gaussian(&sp, &mut stream(2, 0));
        let s = eigh(&k).unwrap();
        let det = jacobian_determinant_fd(&c, &sp, &k, 1e-5).unwrap();
        let e = action_s(&c, &sp, &s).unwrap().total.exp();
        assert!((det - e).norm() <= 1e-6 * e.norm());
    }

    #[test]
    fn split_matches_independent_formula() {
        let c = Coupling::polar(2, 0.08, 1.2, 0.2, 1.0).unwrap();
        let s = SpectralData::diagonal(vec![-0.9, 0.1, 1.3]);
        let (_, s2) = action_split(&c, &s).unwrap();
        assert!((s2 - split_remainder_direct(&c, &s).unwrap()).norm() <= 1e-10);
    }

    #[test]
    fn resolvent_entries_basic() {
        let zero = Coupling::real(2, 0.0).unwrap();
        let s = SpectralData::diagonal(vec![-2.0, 0.0, 2.0]);
        let r = resolvent_entries(&zero, &s).unwrap();
        assert!(r.values.iter().all(|z| (z - 1.0).norm() < 1e-15));
        let c = Coupling::real(2, 0.1).unwrap();
        let r = resolvent_entries(&c, &s).unwrap();
        let maps = ScalarMaps::new(&c);
        for i in 0..3 {
            let eta = maps.h(s.eigenvalues[i].into()).unwrap();
            assert!((r.values[(i, i)] - maps.k_prime(eta).unwrap()).norm() < 1e-12);
        }
        assert!((r.values.clone() - r.values.transpose()).norm() < 1e-15);
    }

    #[test]
    fn corner_at_zero_coupling() {
        let zero = Coupling::real(2, 0.0).unwrap();
        let s = SpectralData::diagonal(vec![-0.5, 0.5]);
        let (u, v) = (Complex64::new(0.3, 1.0), Complex64::new(-1.0, 0.2));
        let o = corner_operator(&zero, &s, u, v).unwrap();
        let r = |w: Complex64, x: f64| 1.0 / (w - x);
        let e = r(u, -0.5) * r(v, -0.5) * r(u, 0.5) + r(u, -0.5) * r(u, 0.5) * r(v, 0.5);
        assert!((o[(0, 1)] - e).norm() < 1e-15);
        assert!(matches!(corner_operator(&zero, &s, Complex64::new(0.5, 0.0), v), Err(Error::PoleCollision(_))));
    }

    #[test]
    fn sigma_contour_matches_direct() {
        let c = Coupling::real(2, 0.05).unwrap();
        let s = SpectralData::diagonal(vec![-0.7, 1.1]);
        let g = KeyholeContour::build(s.spectral_radius(), &c, DEFAULT_NODES).unwrap();
        let a = sigma_contour(&c, &g, &s).unwrap();
        let b = sigma_direct(&c, &s).unwrap();
        assert!(amax(&(a - b)) <= 1e-8);
        let zero = Coupling::real(2, 0.0).unwrap();
        let z = KeyholeContour::build(1.1, &zero, DEFAULT_NODES).unwrap();
        assert!(amax(&sigma_contour(&zero, &z, &s).unwrap()) == 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (beta, lam) in [(Beta::Two, Complex64::new(0.05, 0.0)), (Beta::One, Complex64::new(0.1, 0.0)), (Beta::Two, Complex64::from_polar(0.05, 2.0))] {
            let c = Coupling::with_lambda(2, lam).unwrap();
            let sp = spec(2, beta);
            let k = sample_gaussian(&sp, &mut stream(8, 1));
            let s = eigh(&k).unwrap();
            let g = action_gradient(&c, &sp, &s).unwrap();
            let fd = gradient_fd(&c, &sp, &k, 1e-5).unwrap();
            assert!(amax(&(g.clone() - &fd)) <= 1e-6 * amax(&g).max(1e-3), "{g} vs {fd}");
        }
        let c = Coupling::real(3, 0.04).unwrap();
        let s = SpectralData::diagonal(vec![0.6]);
        let g = action_gradient(&c, &spec(1, Beta::Two), &s).unwrap();
        let d = ScalarMaps::new(&c).h_derivs(0.6.into()).unwrap();
        assert!((g[(0, 0)] - d.h2 / d.h1).norm() < 1e-9);
    }

    #[test]
    fn jacobian_positivity_examples() {
        let r = jacobian_check(2, 1.0, &[-1.0, 2.0]).unwrap();
        assert!(r.overall_positive);
        let r = jacobian_check(3, 0.5, &[0.7, 0.7]).unwrap();
        assert!(r.overall_positive);
        assert!(r.consistency < 1e-8);
        let r = jacobian_check(4, 2.0, &[0.3, 1.7, -2.2, 0.0]).unwrap();
        assert!(r.overall_positive && r.consistency < 1e-10);
    }
}
