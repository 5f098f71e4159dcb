//! Normalised partition function `Z(lambda) / Z(0)` by eigenvalue quadrature
//! (`N <= 3`) and by Monte Carlo, in both the `H` and the `K` variables, plus
//! exact Gaussian moments `E[Tr H^(2k)]` from Wick pairings.
//!
//! Quadrature runs over the ordered chamber `x_1 < ... < x_N` in the centre
//! `c = mean(x)` (Gauss-Hermite) and the consecutive gaps (Gauss-Legendre on
//! `[0, A]`). For complex `lambda` the `H` integral is rotated to
//! `mu = omega x`, `omega = exp(-i arg(lambda) / (2p + 2))`, which keeps both
//! exponents in the right half-plane.

use crate::error::{Error, Result};
use crate::fuss_catalan::fc_cut_distance;
use crate::lvr_action::{action_s, RealAxisMap, COINCIDENCE};
use crate::matrix_core::{eigh, sample_gaussian, Beta, EnsembleSpec};
use crate::montecarlo::{mc_mean, parallel_map, McConfig};
use crate::quadrature::{cached_hermite, cached_legendre};
use crate::scalar_maps::{Coupling, ScalarMaps};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use std::f64::consts::PI;

/// Relative change between node doublings accepted as converged.
pub const QUAD_TOLERANCE: f64 = 1e-6;
/// Largest tolerated Monte Carlo relative standard error.
pub const MAX_RELATIVE_STDERR: f64 = 0.1;
/// Gap cutoff: the Gaussian factor is `exp(-GAP_DECAY)` at the end of the gap interval.
const GAP_DECAY: f64 = 60.0;
const TABLE_ORDER: usize = 24;
const TABLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Starting nodes per dimension, doubled until converged.
    Quadrature { nodes: usize, workers: usize },
    MonteCarlo { samples: usize, seed: u64, workers: usize },
}

impl Method {
    pub fn quadrature(nodes: usize) -> Self {
        Method::Quadrature { nodes, workers: 1 }
    }

    pub fn monte_carlo(samples: usize, seed: u64, workers: usize) -> Self {
        Method::MonteCarlo { samples, seed, workers }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionEstimate {
    pub value: Complex64,
    pub method: MethodKind,
    /// Last doubling change (quadrature) or standard error (Monte Carlo).
    pub error: f64,
    /// Nodes per dimension or samples.
    pub count: usize,
}

/// `N^-2 log Z` with the propagated error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergy {
    pub value: Complex64,
    pub error: f64,
    pub z: PartitionEstimate,
}

fn node_cap(n: usize) -> usize {
    match n {
        1 => 1024,
        2 => 512,
        _ => 128,
    }
}

fn check_quadrature_dim(spec: &EnsembleSpec) -> Result<()> {
    if spec.n > 3 {
        return Err(Error::InvalidParameter(format!("quadrature needs N <= 3, got {}", spec.n)));
    }
    Ok(())
}

fn check_mc_coupling(c: &Coupling) -> Result<()> {
    if !c.is_real() || c.lambda().re < 0.0 {
        return Err(Error::InvalidParameter("Monte Carlo needs real lambda >= 0".into()));
    }
    Ok(())
}

fn exact_one(method: &Method) -> PartitionEstimate {
    let (kind, count) = match *method {
        Method::Quadrature { nodes, .. } => (MethodKind::Quadrature, nodes),
        Method::MonteCarlo { samples, .. } => (MethodKind::MonteCarlo, samples),
    };
    PartitionEstimate { value: Complex64::one(), method: kind, error: 0.0, count }
}

/// Eigenvalues in the chamber from the centre and the gaps.
fn chamber_point(c: f64, gaps: &[f64], out: &mut [f64]) {
    match gaps.len() {
        0 => out[0] = c,
        1 => {
            out[0] = c - 0.5 * gaps[0];
            out[1] = c + 0.5 * gaps[0];
        }
        _ => {
            let (a, b) = (gaps[0], gaps[1]);
            out[0] = c - (2.0 * a + b) / 3.0;
            out[1] = c + (a - b) / 3.0;
            out[2] = c + (a + 2.0 * b) / 3.0;
        }
    }
}

struct Chamber {
    n: usize,
    beta: Beta,
    omega: Complex64,
    nodes: usize,
    workers: usize,
}

impl Chamber {
    fn scales(&self) -> (f64, f64) {
        let re2 = (self.omega * self.omega).re;
        let nn = self.n as f64;
        (nn * re2.sqrt(), (2.0 * GAP_DECAY / (nn * re2)).sqrt())
    }

    /// Largest `|x|` reached by a node with non-zero weight.
    fn reach(&self) -> f64 {
        let (s, a) = self.scales();
        let gh = cached_hermite(self.nodes);
        let cmax = gh.nodes.iter().zip(&gh.weights).filter(|(_, w)| **w > 0.0).fold(0.0f64, |m, (t, _)| m.max(t.abs()));
        cmax / s + if self.n > 1 { a } else { 0.0 }
    }

    /// `omega^(N + beta N(N-1)/2) sum w Delta(x)^beta exp(-N omega^2 |x|^2) extra(x)`
    /// with the centre Gaussian factored into the Hermite weights.
    fn integrate<F>(&self, extra: F) -> Result<Complex64>
    where
        F: Fn(&[f64]) -> Result<Complex64> + Sync,
    {
        let n = self.n;
        let nn = n as f64;
        let (s, a) = self.scales();
        let w2 = self.omega * self.omega;
        let re2 = w2.re;
        let gh = cached_hermite(self.nodes);
        let gl = cached_legendre(self.nodes).mapped(0.0, a);
        let gap_count = n - 1;
        let gap_tuples: Vec<(Vec<f64>, f64)> = match gap_count {
            0 => vec![(vec![], 1.0)],
            1 => gl.nodes.iter().zip(&gl.weights).map(|(g, w)| (vec![*g], *w)).collect(),
            _ => {
                let mut v = Vec::with_capacity(gl.len() * gl.len());
                for (g1, w1) in gl.nodes.iter().zip(&gl.weights) {
                    for (g2, w2) in gl.nodes.iter().zip(&gl.weights) {
                        v.push((vec![*g1, *g2], w1 * w2));
                    }
                }
                v
            }
        };
        let beta = self.beta.as_int() as i32;
        let centres: Vec<usize> = (0..gh.len()).filter(|&k| gh.weights[k] > 0.0).collect();
        let partial = parallel_map(self.workers, centres, |k| -> Result<Complex64> {
            let c = gh.nodes[k] / s;
            let wc = gh.weights[k] / s;
            let mut x = [0.0; 3];
            let mut acc = Complex64::zero();
            for (gaps, wg) in &gap_tuples {
                chamber_point(c, gaps, &mut x[..n]);
                let xs = &x[..n];
                let mut vd = 1.0;
                for i in 0..n {
                    for j in i + 1..n {
                        vd *= xs[j] - xs[i];
                    }
                }
                let q: f64 = xs.iter().map(|v| v * v).sum();
                let expo = -nn * w2 * q + nn * nn * re2 * c * c;
                acc += wg * vd.powi(beta) * expo.exp() * extra(xs)?;
            }
            Ok(wc * acc)
        });
        let mut total = Complex64::zero();
        for v in partial {
            total += v?;
        }
        let power = n as i32 + beta * (n * (n - 1) / 2) as i32;
        Ok(self.omega.powi(power) * total)
    }
}

/// Doubles the node count from `start` until the relative change is below tolerance.
/// Returns the value, the last change and the final node count.
fn converge_value<F>(n: usize, start: usize, mut at: F) -> Result<(Complex64, f64, usize)>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    if start < 2 {
        return Err(Error::InvalidParameter("need at least 2 quadrature nodes".into()));
    }
    let cap = node_cap(n).max(2 * start);
    let mut m = start;
    let mut prev = at(m)?;
    loop {
        m *= 2;
        if m > cap {
            return Err(Error::QuadratureUnderResolved(format!("no convergence up to {} nodes (N = {n})", m / 2)));
        }
        let cur = at(m)?;
        if !cur.is_finite() {
            return Err(Error::QuadratureUnderResolved("non-finite quadrature value".into()));
        }
        let change = (cur - prev).norm();
        if change <= QUAD_TOLERANCE * cur.norm() {
            return Ok((cur, change.max(f64::EPSILON * cur.norm()), m));
        }
        prev = cur;
    }
}

fn converge<F>(spec: &EnsembleSpec, start: usize, at: F) -> Result<PartitionEstimate>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    let (value, error, count) = converge_value(spec.n, start, at)?;
    Ok(PartitionEstimate { value, method: MethodKind::Quadrature, error, count })
}

/// `E[f(x)]` over the eigenvalues of `exp(-N Tr K^2)` by chamber quadrature, with
/// `f` reading `h`, `h'` and `T` from a table built for coupling `c`.
/// Returns the value, the last doubling change and the node count.
pub(crate) fn eigen_expectation<F>(
    c: &Coupling,
    spec: &EnsembleSpec,
    start: usize,
    workers: usize,
    f: F,
) -> Result<(Complex64, f64, usize)>
where
    F: Fn(&RealAxisTable, &[f64]) -> Result<Complex64> + Sync,
{
    check_quadrature_dim(spec)?;
    let maps = ScalarMaps::new(c);
    converge_value(spec.n, start, |m| {
        let ch = Chamber { n: spec.n, beta: spec.beta, omega: Complex64::one(), nodes: m, workers };
        let table = checked_table(&maps, ch.reach())?;
        let with = ch.integrate(|x| f(&table, x))?;
        let without = ch.integrate(|_| Ok(Complex64::one()))?;
        Ok(with / without)
    })
}

fn checked_table(maps: &ScalarMaps, reach: f64) -> Result<RealAxisTable> {
    let table = RealAxisTable::build(maps, reach)?;
    let err = table.max_error(maps)?;
    if err > TABLE_TOLERANCE {
        return Err(Error::QuadratureUnderResolved(format!("interpolation table error {err:e}")));
    }
    Ok(table)
}

/// `Z = E[exp(-N lambda Tr H^(2p))]` under `exp(-N Tr H^2)`.
pub fn z_direct(c: &Coupling, spec: &EnsembleSpec, method: &Method) -> Result<PartitionEstimate> {
    if c.is_degenerate() {
        return Ok(exact_one(method));
    }
    let nn = spec.n as f64;
    let lam = c.lambda();
    let two_p = 2 * c.p() as i32;
    match *method {
        Method::Quadrature { nodes, workers } => {
            check_quadrature_dim(spec)?;
            let omega = Complex64::from_polar(1.0, -lam.arg() / (two_p as f64 + 2.0));
            let coef = nn * lam * omega.powi(two_p);
            converge(spec, nodes, |m| {
                let ch = Chamber { n: spec.n, beta: spec.beta, omega, nodes: m, workers };
                let with = ch.integrate(|x| Ok((-coef * x.iter().map(|v| v.powi(two_p)).sum::<f64>()).exp()))?;
                let without = ch.integrate(|_| Ok(Complex64::one()))?;
                Ok(with / without)
            })
        }
        Method::MonteCarlo { samples, seed, workers } => {
            check_mc_coupling(c)?;
            let lr = lam.re;
            let cfg = McConfig::new(samples, seed, workers)?;
            let m = mc_mean(&cfg, |rng| {
                let h = sample_gaussian(spec, rng);
                Ok(Complex64::new((-nn * lr * h.trace_power(two_p as u32)).exp(), 0.0))
            })?;
            mc_estimate(m.mean, m.stderr, samples)
        }
    }
}

/// `Z = E[exp(S(lambda, K))]` under `exp(-N Tr K^2)`.
pub fn z_lvr(c: &Coupling, spec: &EnsembleSpec, method: &Method) -> Result<PartitionEstimate> {
    if c.is_degenerate() {
        return Ok(exact_one(method));
    }
    match *method {
        Method::Quadrature { nodes, workers } => {
            let beta = spec.beta.as_int() as i32;
            let (value, error, count) = eigen_expectation(c, spec, nodes, workers, |t, x| exp_action(t, x, beta))?;
            Ok(PartitionEstimate { value, method: MethodKind::Quadrature, error, count })
        }
        Method::MonteCarlo { samples, seed, workers } => {
            check_mc_coupling(c)?;
            let cfg = McConfig::new(samples, seed, workers)?;
            let m = mc_mean(&cfg, |rng| {
                let k = sample_gaussian(spec, rng);
                Ok(action_s(c, spec, &eigh(&k)?)?.total.exp())
            })?;
            mc_estimate(m.mean, m.stderr, samples)
        }
    }
}

/// `exp(S) = prod_i h'(x_i) prod_{i<j} D_ij^beta`; the product form needs no branch choice.
fn exp_action<M: RealAxisMap>(m: &M, x: &[f64], beta: i32) -> Result<Complex64> {
    let mut h = [Complex64::zero(); 3];
    let mut h1 = [Complex64::zero(); 3];
    for (i, &xi) in x.iter().enumerate() {
        (h[i], h1[i]) = m.h_h1(xi)?;
    }
    let mut acc = Complex64::one();
    for i in 0..x.len() {
        acc *= h1[i];
        for j in i + 1..x.len() {
            let d = if (x[j] - x[i]).abs() < COINCIDENCE { 0.5 * (h1[i] + h1[j]) } else { (h[j] - h[i]) / (x[j] - x[i]) };
            acc *= d.powi(beta);
        }
    }
    Ok(acc)
}

fn mc_estimate(mean: Complex64, stderr: f64, samples: usize) -> Result<PartitionEstimate> {
    if !(stderr <= MAX_RELATIVE_STDERR * mean.norm()) {
        return Err(Error::VarianceBlowup(stderr / mean.norm()));
    }
    Ok(PartitionEstimate { value: mean, method: MethodKind::MonteCarlo, error: stderr, count: samples })
}

/// `F = N^-2 log Z` from `z_direct`.
pub fn free_energy(c: &Coupling, spec: &EnsembleSpec, method: &Method) -> Result<FreeEnergy> {
    free_energy_from(spec, z_direct(c, spec, method)?)
}

/// `F = N^-2 log Z` from a given estimate.
pub fn free_energy_from(spec: &EnsembleSpec, z: PartitionEstimate) -> Result<FreeEnergy> {
    let rel = z.error / z.value.norm();
    if !(rel < 0.5) {
        return Err(Error::VarianceBlowup(rel));
    }
    let n2 = (spec.n * spec.n) as f64;
    Ok(FreeEnergy { value: z.value.ln() / n2, error: rel / n2, z })
}

/// Chebyshev-panel interpolant of `h` and `h'` on `[-half_width, half_width]`.
///
/// Panel half-widths are a quarter of the distance to the cut rays at the
/// left end, so every panel's Bernstein ellipse ratio stays above `3 + sqrt 8`.
#[derive(Debug, Clone)]
pub struct RealAxisTable {
    starts: Vec<f64>,
    panels: Vec<Panel>,
}

#[derive(Debug, Clone)]
struct Panel {
    mid: f64,
    half: f64,
    /// `[h, h', T]` at the Chebyshev points.
    vals: Vec<[Complex64; 3]>,
}

fn cheb_points() -> impl Iterator<Item = f64> {
    (0..TABLE_ORDER).map(|j| (PI * j as f64 / (TABLE_ORDER - 1) as f64).cos())
}

impl Panel {
    fn eval(&self, x: f64) -> [Complex64; 3] {
        let t = (x - self.mid) / self.half;
        let mut num = [Complex64::zero(); 3];
        let mut den = 0.0;
        for (j, tj) in cheb_points().enumerate() {
            let d = t - tj;
            if d == 0.0 {
                return self.vals[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == TABLE_ORDER - 1 {
                w *= 0.5;
            }
            let q = w / d;
            for (acc, v) in num.iter_mut().zip(&self.vals[j]) {
                *acc += q * v;
            }
            den += q;
        }
        num.map(|v| v / den)
    }
}

impl RealAxisTable {
    pub fn build(maps: &ScalarMaps, half_width: f64) -> Result<Self> {
        let params = maps.fuss_catalan().p();
        let params = crate::fuss_catalan::FussCatalanParams::new(params)?;
        let lam = maps.lambda();
        let mut starts = Vec::new();
        let mut panels = Vec::new();
        let mut a = -half_width;
        while a < half_width {
            let d = fc_cut_distance(params, lam, a.into());
            let hw = (0.25 * d).min(1.0);
            let b = (a + 2.0 * hw).min(half_width);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let vals = cheb_points().map(|t| direct_values(maps, mid + half * t)).collect::<Result<Vec<_>>>()?;
            starts.push(a);
            panels.push(Panel { mid, half, vals });
            a = b;
        }
        Ok(Self { starts, panels })
    }

    fn locate(&self, x: f64) -> Result<&Panel> {
        let idx = self.starts.partition_point(|s| *s <= x);
        // mid + half can round one ulp below the panel end
        if idx == 0 || x > self.panels[idx - 1].mid + self.panels[idx - 1].half * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!("{x} outside the interpolation table")));
        }
        Ok(&self.panels[idx - 1])
    }

    /// `T_p(-lambda x^(2p-2))`.
    pub fn t_value(&self, x: f64) -> Result<Complex64> {
        Ok(self.locate(x)?.eval(x)[2])
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Largest relative deviation from direct evaluation at two off-node points per panel.
    pub fn max_error(&self, maps: &ScalarMaps) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in &self.panels {
            for t in [0.987, -0.123] {
                let x = p.mid + p.half * t;
                let approx = p.eval(x);
                for (a, d) in approx.iter().zip(direct_values(maps, x)?) {
                    worst = worst.max((a - d).norm() / d.norm().max(1e-300));
                }
            }
        }
        Ok(worst)
    }
}

fn direct_values(maps: &ScalarMaps, x: f64) -> Result<[Complex64; 3]> {
    let d = maps.h_derivs(x.into())?;
    Ok([d.h, d.h1, maps.t(x.into())?])
}

impl RealAxisMap for RealAxisTable {
    fn h_h1(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let [h, h1, _] = self.locate(x)?.eval(x);
        Ok((h, h1))
    }
}

/// `E[Tr H^(2k)]` for the ensemble `exp(-N Tr H^2)`, exactly, by summing over Wick pairings.
pub fn gaussian_moment_exact(n: usize, k: usize, beta: Beta) -> Result<BigRational> {
    if k > 6 || n > 8 || n == 0 {
        return Err(Error::OutOfRange(format!("moment table covers 1 <= N <= 8, k <= 6; got N = {n}, k = {k}")));
    }
    if k == 0 {
        return Ok(BigRational::from_integer(BigInt::from(n)));
    }
    let slots = 2 * k;
    // counts[c] = number of (pairing, twist) choices with c index loops
    let mut counts = vec![0u64; slots + 1];
    let mut partner = vec![usize::MAX; slots];
    let twists = beta == Beta::One;
    enumerate_pairings(&mut partner, twists, &mut counts);
    let mut total = BigInt::zero();
    for (c, &m) in counts.iter().enumerate() {
        total += BigInt::from(m) * BigInt::from(n).pow(c as u32);
    }
    let per_pair = match beta {
        Beta::Two => 2 * n,
        Beta::One => 4 * n,
    };
    Ok(BigRational::new(total, BigInt::from(per_pair).pow(k as u32)))
}

fn enumerate_pairings(partner: &mut [usize], twists: bool, counts: &mut [u64]) {
    let Some(a) = partner.iter().position(|p| *p == usize::MAX) else {
        let pairs: Vec<(usize, usize)> = (0..partner.len()).filter(|&a| a < partner[a]).map(|a| (a, partner[a])).collect();
        let choices = if twists { 1usize << pairs.len() } else { 1 };
        for mask in 0..choices {
            counts[index_loops(partner.len(), &pairs, mask)] += 1;
        }
        return;
    };
    for b in a + 1..partner.len() {
        if partner[b] == usize::MAX {
            partner[a] = b;
            partner[b] = a;
            enumerate_pairings(partner, twists, counts);
            partner[a] = usize::MAX;
            partner[b] = usize::MAX;
        }
    }
}

/// Slot `a` carries `H[i_a, i_(a+1)]`; a plain pair glues `i_a = i_(b+1)`, `i_(a+1) = i_b`,
/// a twisted pair glues `i_a = i_b`, `i_(a+1) = i_(b+1)`.
fn index_loops(slots: usize, pairs: &[(usize, usize)], twist_mask: usize) -> usize {
    let mut parent: Vec<usize> = (0..slots).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut join = |x: usize, y: usize| {
        let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
        parent[rx] = ry;
    };
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        let (a1, b1) = ((a + 1) % slots, (b + 1) % slots);
        if twist_mask >> idx & 1 == 1 {
            join(a, b);
            join(a1, b1);
        } else {
            join(a, b1);
            join(a1, b);
        }
    }
    (0..slots).filter(|&x| find(&mut parent, x) == x).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_hermite;
    use num_traits::ToPrimitive;

    fn spec(n: usize, beta: Beta) -> EnsembleSpec {
        EnsembleSpec::new(n, beta).unwrap()
    }

    fn q() -> Method {
        Method::quadrature(64)
    }

    #[test]
    fn wick_examples() {
        for n in 1..=8 {
            let r = gaussian_moment_exact(n, 1, Beta::Two).unwrap();
            assert_eq!(r, BigRational::new(BigInt::from(n), BigInt::from(2)));
            let r = gaussian_moment_exact(n, 1, Beta::One).unwrap();
            assert_eq!(r, BigRational::new(BigInt::from(n + 1), BigInt::from(4)));
            assert_eq!(gaussian_moment_exact(n, 0, Beta::One).unwrap(), BigRational::from_integer(BigInt::from(n)));
        }
        assert_eq!(gaussian_moment_exact(1, 2, Beta::Two).unwrap(), BigRational::new(3.into(), 4.into()));
        // GUE: E Tr H^4 = (2N^3 + N) / (4N^2)
        let r = gaussian_moment_exact(3, 2, Beta::Two).unwrap();
        assert_eq!(r, BigRational::new(BigInt::from(2 * 27 + 3), BigInt::from(36)));
        assert!(matches!(gaussian_moment_exact(2, 7, Beta::Two), Err(Error::OutOfRange(_))));
        assert!(matches!(gaussian_moment_exact(9, 1, Beta::Two), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn zero_coupling_is_exactly_one() {
        let c = Coupling::real(2, 0.0).unwrap();
        assert_eq!(z_direct(&c, &spec(2, Beta::Two), &q()).unwrap().value, Complex64::one());
        assert_eq!(z_lvr(&c, &spec(3, Beta::One), &q()).unwrap().value, Complex64::one());
        assert_eq!(free_energy(&c, &spec(2, Beta::Two), &q()).unwrap().value, Complex64::zero());
    }

    #[test]
    fn one_dimensional_oracle() {
        let c = Coupling::real(2, 0.1).unwrap();
        let z = z_direct(&c, &spec(1, Beta::Two), &q()).unwrap();
        let r = gauss_hermite(200);
        let num: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * (-0.1 * x.powi(4)).exp()).sum();
        assert!((z.value.re - num / PI.sqrt()).abs() < 1e-10);
        assert!(z.value.im.abs() < 1e-14);
    }

    #[test]
    fn representations_agree() {
        let cases = [
            (2, 2, Complex64::new(0.1, 0.0), Beta::Two),
            (3, 2, Complex64::from_polar(0.05, 0.75 * PI), Beta::Two),
            (2, 3, Complex64::from_polar(0.02, -0.75 * PI), Beta::One),
        ];
        for (p, n, lam, beta) in cases {
            let c = Coupling::with_lambda(p, lam).unwrap();
            let a = z_direct(&c, &spec(n, beta), &q()).unwrap();
            let b = z_lvr(&c, &spec(n, beta), &q()).unwrap();
            assert!((a.value - b.value).norm() <= 1e-4 * a.value.norm(), "{p} {n} {lam}: {} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        for lam in [Complex64::new(0.1, 0.0), Complex64::from_polar(0.1, 2.9)] {
            let maps = ScalarMaps::new(&Coupling::with_lambda(3, lam).unwrap());
            let t = RealAxisTable::build(&maps, 8.0).unwrap();
            assert!(t.max_error(&maps).unwrap() <= 1e-12);
            assert!(t.h_h1(9.0).is_err());
        }
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let c = Coupling::real(2, 0.1).unwrap();
        let sp = spec(2, Beta::Two);
        let exact = z_direct(&c, &sp, &q()).unwrap().value;
        let a = z_direct(&c, &sp, &Method::monte_carlo(20_000, 3, 1)).unwrap();
        let b = z_lvr(&c, &sp, &Method::monte_carlo(20_000, 3, 1)).unwrap();
        assert!((a.value - exact).norm() < 4.0 * a.error);
        assert!((b.value - exact).norm() < 4.0 * b.error);
        let complex = Coupling::polar(2, 0.1, 1.0, 0.2, 1.0).unwrap();
        assert!(z_direct(&complex, &sp, &Method::monte_carlo(100, 1, 1)).is_err());
    }

    #[test]
    fn small_coupling_slope() {
        let c = Coupling::real(2, 1e-3).unwrap();
        let f = free_energy(&c, &spec(1, Beta::Two), &q()).unwrap();
        let slope = f.value.re / 1e-3;
        let exact = -gaussian_moment_exact(1, 2, Beta::Two).unwrap().to_f64().unwrap();
        assert!((slope - exact).abs() < 0.01 * exact.abs());
    }
}
