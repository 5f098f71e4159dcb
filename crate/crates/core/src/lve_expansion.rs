//! Labeled trees, BKAR interpolation weights and tree amplitudes of the
//! loop vertex expansion.
//!
//! Vertices are numbered `0..n`. An edge `(i, j)` acts on the replicas as
//! `(1/(2N)) sum_ab d/d(K_i)_ab d/d(K_j)_ba`, the `1/(2N)` being the
//! covariance of one matrix entry. The tree amplitude is
//! `A_T = N^-2 (2N)^-(n-1) int dw E_{C(x)}[d_T prod_i S(K_i)]`.

use crate::error::{Error, Result};
use crate::lvr_action::{action_s, GradientKernel};
use crate::matrix_core::{eigh, mix_replicas, psd_cholesky, sample_gaussian, stream, Beta, CMatrix, EnsembleSpec, HermitianMatrix, RMatrix};
use crate::montecarlo::{mc_means, parallel_map};
use crate::partition_oracle::{eigen_expectation, Method};
use crate::scalar_maps::Coupling;
use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use std::collections::VecDeque;

/// Largest `n` accepted by `enumerate_trees`.
pub const MAX_ENUMERATED: usize = 7;
/// Relative disagreement between steps `h` and `h/2` that counts as unstable.
pub const STEP_TOLERANCE: f64 = 1e-3;
/// Spectral radius the shared gradient contour is built for.
const KERNEL_RADIUS: f64 = 3.0;

/// Spanning tree on vertices `0..n`, edges stored as sorted pairs `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl LabeledTree {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 || edges.len() + 1 != n {
            return Err(Error::InvalidParameter(format!("a tree on {n} vertices has {} edges, got {}", n.saturating_sub(1), edges.len())));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("bad edge ({a}, {b})")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let t = Self { n, edges: norm };
        if t.component_count() != 1 {
            return Err(Error::InvalidParameter("edges do not form a spanning tree".into()));
        }
        Ok(t)
    }

    /// The tree with no edges on one vertex.
    pub fn trivial() -> Self {
        Self { n: 1, edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == v || *b == v).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        (0..self.n).filter(|&x| find(&mut parent, x) == x).count()
    }

    /// Tree with Prüfer sequence `seq` (entries in `0..n`, length `n - 2`).
    pub fn from_prufer(n: usize, seq: &[usize]) -> Result<Self> {
        if n == 1 && seq.is_empty() {
            return Ok(Self::trivial());
        }
        if n < 2 || seq.len() != n - 2 || seq.iter().any(|&v| v >= n) {
            return Err(Error::InvalidParameter(format!("invalid Prüfer sequence {seq:?} for n = {n}")));
        }
        let mut degree = vec![1usize; n];
        for &v in seq {
            degree[v] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &v in seq {
            let leaf = (0..n).find(|&u| degree[u] == 1).expect("a leaf exists while the sequence is non-empty");
            edges.push((leaf, v));
            degree[leaf] -= 1;
            degree[v] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
        edges.push((rest[0], rest[1]));
        Self::new(n, &edges)
    }

    pub fn to_prufer(&self) -> Vec<usize> {
        if self.n <= 2 {
            return Vec::new();
        }
        let mut adj = self.adjacency();
        let mut seq = Vec::with_capacity(self.n - 2);
        for _ in 0..self.n - 2 {
            let leaf = (0..self.n).find(|&u| adj[u].len() == 1).expect("a finite tree has a leaf");
            let v = adj[leaf][0];
            seq.push(v);
            adj[leaf].clear();
            adj[v].retain(|&u| u != leaf);
        }
        seq
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Every labeled tree on `n` vertices, in lexicographic Prüfer order.
pub fn enumerate_trees(n: usize) -> Result<impl Iterator<Item = LabeledTree>> {
    if !(1..=MAX_ENUMERATED).contains(&n) {
        return Err(Error::OutOfRange(format!("tree enumeration covers 1 <= n <= {MAX_ENUMERATED}, got {n}")));
    }
    let len = n.saturating_sub(2);
    let total = if n <= 2 { 1 } else { n.pow(len as u32) };
    Ok((0..total).map(move |mut code| {
        let mut seq = vec![0; len];
        for slot in seq.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        LabeledTree::from_prufer(n, &seq).expect("every sequence encodes a tree")
    }))
}

/// One weakening parameter per tree edge, in the tree's edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakeningVector {
    w: Vec<f64>,
}

impl WeakeningVector {
    pub fn new(t: &LabeledTree, w: Vec<f64>) -> Result<Self> {
        if w.len() != t.edges().len() || w.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidParameter(format!("need {} weights in [0, 1]", t.edges().len())));
        }
        Ok(Self { w })
    }

    pub fn uniform<R: Rng + ?Sized>(t: &LabeledTree, rng: &mut R) -> Self {
        Self { w: (0..t.edges().len()).map(|_| rng.random::<f64>()).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }
}

/// `x_ij = min of w along the tree path from i to j`, `x_ii = 1`.
pub fn bkar_x_matrix(t: &LabeledTree, w: &WeakeningVector) -> RMatrix {
    forest_x_matrix(t.n(), t.edges(), w.values())
}

/// As `bkar_x_matrix` for a forest; vertices in different components get `x_ij = 0`.
pub fn forest_x_matrix(n: usize, edges: &[(usize, usize)], w: &[f64]) -> RMatrix {
    let mut adj = vec![Vec::new(); n];
    for (&(a, b), &wk) in edges.iter().zip(w) {
        adj[a].push((b, wk));
        adj[b].push((a, wk));
    }
    let mut x = RMatrix::zeros(n, n);
    for src in 0..n {
        let mut best = vec![f64::NAN; n];
        best[src] = 1.0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &(v, wk) in &adj[u] {
                if best[v].is_nan() {
                    best[v] = best[u].min(wk);
                    queue.push_back(v);
                }
            }
        }
        for dst in 0..n {
            x[(src, dst)] = if best[dst].is_nan() { 0.0 } else { best[dst] };
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeEstimate {
    pub value: Complex64,
    pub stderr: f64,
    pub n_w_samples: usize,
    pub n_mc_samples: usize,
    pub tree: LabeledTree,
}

/// Sampling budget for `tree_amplitude`.
///
/// Each of the `n_mc` samples draws independent Gaussian matrices and reuses
/// them for `n_w` weakening draws, so samples stay independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeParams {
    pub n_w: usize,
    pub n_mc: usize,
    pub fd_step: f64,
    pub seed: u64,
    pub workers: usize,
    /// Starting nodes for the single-vertex quadrature.
    pub quad_nodes: usize,
}

impl Default for AmplitudeParams {
    fn default() -> Self {
        Self { n_w: 4, n_mc: 2000, fd_step: 1e-4, seed: 0, workers: 1, quad_nodes: 64 }
    }
}

/// Directional derivative of the gradient, `d/dt G(K + t E)`, for a general
/// complex direction `E = E_h + i E_a` with Hermitian `E_h`, `E_a`.
fn gradient_derivative(kernel: &GradientKernel, beta: Beta, k: &HermitianMatrix, e: &CMatrix, step: f64) -> Result<CMatrix> {
    let eh = (e + e.adjoint()) * Complex64::new(0.5, 0.0);
    let ea = (e - e.adjoint()) * Complex64::new(0.0, -0.5);
    let mut out = real_direction(kernel, beta, k, &eh, step)?;
    if ea.iter().any(|z| z.norm() > 0.0) {
        out += real_direction(kernel, beta, k, &ea, step)? * Complex64::i();
    }
    Ok(out)
}

fn real_direction(kernel: &GradientKernel, beta: Beta, k: &HermitianMatrix, e: &CMatrix, step: f64) -> Result<CMatrix> {
    let e = HermitianMatrix::new(e.clone())?;
    let plus = eigh(&k.add(&e.scaled(step)))?;
    let minus = eigh(&k.add(&e.scaled(-step)))?;
    Ok((kernel.gradient(beta, &plus)? - kernel.gradient(beta, &minus)?) / Complex64::new(2.0 * step, 0.0))
}

/// Shape of a tree with at most 3 vertices and degrees at most 2.
enum Shape {
    Edge(usize, usize),
    /// `(leaf, middle, leaf)`.
    Path(usize, usize, usize),
}

fn shape(t: &LabeledTree) -> Result<Shape> {
    if t.n() > 3 || t.max_degree() > 2 {
        return Err(Error::BudgetExceeded(format!("amplitudes need n <= 3 and degree <= 2, got n = {}", t.n())));
    }
    match t.n() {
        2 => Ok(Shape::Edge(0, 1)),
        3 => {
            let mid = (0..3).find(|&v| t.degree(v) == 2).expect("a 3-vertex tree is a path");
            let leaves: Vec<usize> = (0..3).filter(|&v| v != mid).collect();
            Ok(Shape::Path(leaves[0], mid, leaves[1]))
        }
        _ => Err(Error::InvalidParameter("edge amplitudes need n >= 2".into())),
    }
}

/// `d_T prod_i S(K_i)` with bare contractions `sum_ab d/d(K_i)_ab d/d(K_j)_ba`.
fn tree_derivative(kernel: &GradientKernel, beta: Beta, shape: &Shape, ks: &[HermitianMatrix], step: f64) -> Result<Complex64> {
    match *shape {
        Shape::Edge(a, b) => {
            let ga = kernel.gradient(beta, &eigh(&ks[a])?)?;
            let gb = kernel.gradient(beta, &eigh(&ks[b])?)?;
            Ok((ga * gb).trace())
        }
        Shape::Path(a, m, b) => {
            let ga = kernel.gradient(beta, &eigh(&ks[a])?)?;
            let gb = kernel.gradient(beta, &eigh(&ks[b])?)?;
            let d = gradient_derivative(kernel, beta, &ks[m], &gb, step)?;
            Ok((ga * d).trace())
        }
    }
}

/// Monte Carlo estimate of `A_T` for a tree with at least one edge.
pub fn tree_amplitude(c: &Coupling, spec: &EnsembleSpec, t: &LabeledTree, params: &AmplitudeParams) -> Result<AmplitudeEstimate> {
    if t.n() == 1 {
        return Ok(single_vertex_amplitude(c, spec, &Method::Quadrature { nodes: params.quad_nodes, workers: params.workers })?.total);
    }
    let sh = shape(t)?;
    if params.n_w == 0 || params.n_mc < 2 || !(params.fd_step > 0.0) {
        return Err(Error::InvalidParameter("need n_w >= 1, n_mc >= 2 and a positive step".into()));
    }
    if c.is_degenerate() {
        return Ok(AmplitudeEstimate { value: Complex64::zero(), stderr: 0.0, n_w_samples: params.n_w, n_mc_samples: params.n_mc, tree: t.clone() });
    }
    let kernel = GradientKernel::new(c, KERNEL_RADIUS, crate::contour::DEFAULT_NODES)?;
    let beta = spec.beta;
    if let Shape::Path(..) = sh {
        step_check(&kernel, spec, t, &sh, params)?;
    }
    let nn = spec.n as f64;
    let scale = 1.0 / (nn * nn * (2.0 * nn).powi(t.n() as i32 - 1));
    let cfg = crate::montecarlo::McConfig::new(params.n_mc, params.seed, params.workers)?;
    let means = mc_means(&cfg, 1, |rng| {
        let draws: Vec<HermitianMatrix> = (0..t.n()).map(|_| sample_gaussian(spec, rng)).collect();
        let mut acc = Complex64::zero();
        for _ in 0..params.n_w {
            let w = WeakeningVector::uniform(t, rng);
            let l = psd_cholesky(&bkar_x_matrix(t, &w))?;
            let ks = mix_replicas(&l, &draws);
            acc += tree_derivative(&kernel, beta, &sh, &ks, params.fd_step)?;
        }
        Ok(vec![acc * scale / params.n_w as f64])
    })?;
    Ok(AmplitudeEstimate {
        value: means[0].mean,
        stderr: means[0].stderr,
        n_w_samples: params.n_w,
        n_mc_samples: params.n_mc,
        tree: t.clone(),
    })
}

/// Compares the finite-difference Hessian at `fd_step` and `fd_step / 2` on one draw.
fn step_check(kernel: &GradientKernel, spec: &EnsembleSpec, t: &LabeledTree, sh: &Shape, params: &AmplitudeParams) -> Result<()> {
    let mut rng = stream(params.seed, u64::MAX);
    let draws: Vec<HermitianMatrix> = (0..t.n()).map(|_| sample_gaussian(spec, &mut rng)).collect();
    let a = tree_derivative(kernel, spec.beta, sh, &draws, params.fd_step)?;
    let b = tree_derivative(kernel, spec.beta, sh, &draws, 0.5 * params.fd_step)?;
    let rel = (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    if rel > STEP_TOLERANCE {
        return Err(Error::StepInstability(format!("steps {} and {} differ by {rel:e}", params.fd_step, 0.5 * params.fd_step)));
    }
    Ok(())
}

/// `A_T0 = N^-2 E[S]` and its split `A_1 = N^-2 E[S1]`, `A_2 = N^-2 E[S2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleVertex {
    pub total: AmplitudeEstimate,
    pub a1: AmplitudeEstimate,
    pub a2: AmplitudeEstimate,
}

/// Single-vertex amplitude by eigenvalue quadrature (`N <= 3`) or Monte Carlo.
pub fn single_vertex_amplitude(c: &Coupling, spec: &EnsembleSpec, method: &Method) -> Result<SingleVertex> {
    let nn = spec.n as f64;
    let n2 = nn * nn;
    let est = |value: Complex64, stderr: f64, n_w: usize, n_mc: usize| AmplitudeEstimate {
        value: value / n2,
        stderr: stderr / n2,
        n_w_samples: n_w,
        n_mc_samples: n_mc,
        tree: LabeledTree::trivial(),
    };
    if c.is_degenerate() {
        let z = est(Complex64::zero(), 0.0, 0, 0);
        return Ok(SingleVertex { total: z.clone(), a1: z.clone(), a2: z });
    }
    match *method {
        Method::Quadrature { nodes, workers } => {
            let (s, se, m) = eigen_expectation(c, spec, nodes, workers, |t, x| {
                Ok(crate::lvr_action::action_from_eigenvalues(t, x, spec.beta)?.total)
            })?;
            let (s1, se1, m1) = eigen_expectation(c, spec, nodes, workers, |t, x| {
                let mut acc = Complex64::zero();
                for &xi in x {
                    acc += t.t_value(xi)?.ln();
                }
                Ok(0.5 * nn * acc)
            })?;
            Ok(SingleVertex { total: est(s, se, 0, m), a1: est(s1, se1, 0, m1), a2: est(s - s1, se + se1, 0, m.max(m1)) })
        }
        Method::MonteCarlo { samples, seed, workers } => {
            if !c.is_real() || c.lambda().re < 0.0 {
                return Err(Error::InvalidParameter("Monte Carlo needs real lambda >= 0".into()));
            }
            let cfg = crate::montecarlo::McConfig::new(samples, seed, workers)?;
            let maps = crate::scalar_maps::ScalarMaps::new(c);
            let r = mc_means(&cfg, 3, |rng| {
                let s = eigh(&sample_gaussian(spec, rng))?;
                let total = action_s(c, spec, &s)?.total;
                let mut s1 = Complex64::zero();
                for &x in &s.eigenvalues {
                    s1 += maps.t(x.into())?.ln();
                }
                s1 *= 0.5 * nn;
                Ok(vec![total, s1, total - s1])
            })?;
            Ok(SingleVertex {
                total: est(r[0].mean, r[0].stderr, 0, samples),
                a1: est(r[1].mean, r[1].stderr, 0, samples),
                a2: est(r[2].mean, r[2].stderr, 0, samples),
            })
        }
    }
}

/// Truncated sum `sum_{n <= n_max} (1/n!) sum_T A_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSum {
    pub value: Complex64,
    /// Root-sum-square of the member standard errors, each weighted by `1/n!`.
    pub error: f64,
    /// `sum (1/n!) sum_T |A_T|`.
    pub abs_sum: f64,
    pub amplitudes: Vec<AmplitudeEstimate>,
}

/// `F` truncated at `n_max <= 3` vertices; the single vertex uses quadrature when `N <= 3`.
pub fn lve_truncated_f(c: &Coupling, spec: &EnsembleSpec, n_max: usize, params: &AmplitudeParams) -> Result<TruncatedSum> {
    if !(1..=3).contains(&n_max) {
        return Err(Error::OutOfRange(format!("truncation order must be 1..=3, got {n_max}")));
    }
    let single_method = if spec.n <= 3 {
        Method::Quadrature { nodes: params.quad_nodes, workers: params.workers }
    } else {
        Method::MonteCarlo { samples: params.n_mc, seed: params.seed, workers: params.workers }
    };
    let mut amplitudes = vec![single_vertex_amplitude(c, spec, &single_method)?.total];
    let mut value = amplitudes[0].value;
    let mut var = amplitudes[0].stderr.powi(2);
    let mut abs_sum = amplitudes[0].value.norm();
    let mut factorial = 1.0;
    for n in 2..=n_max {
        factorial *= n as f64;
        let trees: Vec<LabeledTree> = enumerate_trees(n)?.collect();
        let results = parallel_map(1, trees, |t| {
            let p = AmplitudeParams { seed: params.seed.wrapping_add(1000 * n as u64 + t.to_prufer().first().copied().unwrap_or(0) as u64), ..*params };
            tree_amplitude(c, spec, &t, &p)
        });
        for r in results {
            let a = r?;
            value += a.value / factorial;
            var += (a.stderr / factorial).powi(2);
            abs_sum += a.value.norm() / factorial;
            amplitudes.push(a);
        }
    }
    Ok(TruncatedSum { value, error: var.sqrt(), abs_sum, amplitudes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::symmetric_eigenvalues;
    use crate::partition_oracle::free_energy;

    #[test]
    fn cayley_counts_and_codec() {
        for n in 1..=7 {
            let trees: Vec<LabeledTree> = enumerate_trees(n).unwrap().collect();
            let expected = if n <= 2 { 1 } else { n.pow(n as u32 - 2) };
            assert_eq!(trees.len(), expected);
            let set: std::collections::HashSet<_> = trees.iter().cloned().collect();
            assert_eq!(set.len(), expected);
            for t in trees.iter().take(50) {
                assert_eq!(LabeledTree::from_prufer(n, &t.to_prufer()).unwrap(), *t);
            }
        }
        assert!(enumerate_trees(0).is_err());
        assert!(enumerate_trees(8).is_err());
        assert!(enumerate_trees(1).unwrap().next().unwrap().edges().is_empty());
    }

    #[test]
    fn x_matrix_examples() {
        let t = LabeledTree::new(3, &[(0, 1), (1, 2)]).unwrap();
        let x = bkar_x_matrix(&t, &WeakeningVector::new(&t, vec![0.5, 0.2]).unwrap());
        assert_eq!(x[(0, 2)], 0.2);
        assert_eq!(x[(0, 1)], 0.5);
        assert_eq!(x[(1, 1)], 1.0);
        let f = forest_x_matrix(4, &[(0, 1), (2, 3)], &[0.3, 0.9]);
        assert_eq!(f[(0, 2)], 0.0);
        assert_eq!(f[(2, 3)], 0.9);
        let ones = bkar_x_matrix(&t, &WeakeningVector::new(&t, vec![1.0, 1.0]).unwrap());
        assert!(ones.iter().all(|v| *v == 1.0));
        assert!(LabeledTree::new(3, &[(0, 1), (0, 1)]).is_err());
        assert!(symmetric_eigenvalues(&x).unwrap()[0] >= -1e-12);
    }

    #[test]
    fn zero_coupling_amplitudes_vanish() {
        let c = Coupling::real(2, 0.0).unwrap();
        let sp = EnsembleSpec::new(2, Beta::Two).unwrap();
        let t = LabeledTree::new(2, &[(0, 1)]).unwrap();
        assert_eq!(tree_amplitude(&c, &sp, &t, &AmplitudeParams::default()).unwrap().value, Complex64::zero());
        assert_eq!(lve_truncated_f(&c, &sp, 3, &AmplitudeParams::default()).unwrap().value, Complex64::zero());
        let star = LabeledTree::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(matches!(tree_amplitude(&c, &sp, &star, &AmplitudeParams::default()), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn one_vertex_sum_is_single_vertex() {
        let c = Coupling::real(2, 0.02).unwrap();
        let sp = EnsembleSpec::new(2, Beta::Two).unwrap();
        let s = lve_truncated_f(&c, &sp, 1, &AmplitudeParams::default()).unwrap();
        let a = single_vertex_amplitude(&c, &sp, &Method::quadrature(64)).unwrap();
        assert_eq!(s.value, a.total.value);
        assert!((a.a1.value + a.a2.value - a.total.value).norm() < 1e-15);
        let mc = single_vertex_amplitude(&c, &sp, &Method::monte_carlo(20_000, 5, 1)).unwrap();
        assert!((mc.total.value - a.total.value).norm() < 4.0 * mc.total.stderr);
        assert!((mc.a1.value - a.a1.value).norm() < 4.0 * mc.a1.stderr);
    }

    #[test]
    fn two_vertex_truncation_tracks_free_energy() {
        let c = Coupling::real(2, 0.05).unwrap();
        let sp = EnsembleSpec::new(2, Beta::Two).unwrap();
        let params = AmplitudeParams { n_mc: 4000, seed: 11, ..Default::default() };
        let s = lve_truncated_f(&c, &sp, 2, &params).unwrap();
        let f = free_energy(&c, &sp, &Method::quadrature(64)).unwrap();
        let one = lve_truncated_f(&c, &sp, 1, &params).unwrap();
        assert!((s.value - f.value).norm() < (one.value - f.value).norm());
        assert!((s.value - f.value).norm() < 4.0 * (s.error + f.error) + 1e-6);
    }

    #[test]
    fn path_amplitude_is_finite_and_stable() {
        let c = Coupling::real(2, 0.05).unwrap();
        let sp = EnsembleSpec::new(2, Beta::Two).unwrap();
        let t = LabeledTree::new(3, &[(0, 1), (1, 2)]).unwrap();
        let a = tree_amplitude(&c, &sp, &t, &AmplitudeParams { n_mc: 200, n_w: 2, ..Default::default() }).unwrap();
        assert!(a.value.is_finite() && a.stderr.is_finite());
    }
}
