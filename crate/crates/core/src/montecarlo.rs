//! Chunked Monte Carlo averaging with worker-count independent results.
//!
//! Sample `i` belongs to chunk `i / CHUNK`, and chunk `c` draws from
//! stream `c` of the master seed. Chunk sums are reduced in chunk order.

use crate::error::{Error, Result};
use crate::matrix_core::stream;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK: usize = 512;

/// Sample budget, master seed and worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64, workers: usize) -> Result<Self> {
        if samples < 2 || workers == 0 {
            return Err(Error::InvalidParameter("need at least 2 samples and 1 worker".into()));
        }
        Ok(Self { samples, seed, workers })
    }
}

/// Sample mean and its standard error (`sqrt(var re + var im) / sqrt(n)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMean {
    pub mean: Complex64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone)]
struct Acc {
    sum: Vec<Complex64>,
    sq_re: Vec<f64>,
    sq_im: Vec<f64>,
    count: usize,
}

impl Acc {
    fn new(k: usize) -> Self {
        Self { sum: vec![Complex64::new(0.0, 0.0); k], sq_re: vec![0.0; k], sq_im: vec![0.0; k], count: 0 }
    }

    fn push(&mut self, xs: &[Complex64]) -> Result<()> {
        if xs.len() != self.sum.len() {
            return Err(Error::InvalidParameter("sample width changed between draws".into()));
        }
        for (i, x) in xs.iter().enumerate() {
            self.sum[i] += x;
            self.sq_re[i] += x.re * x.re;
            self.sq_im[i] += x.im * x.im;
        }
        self.count += 1;
        Ok(())
    }

    fn merge(&mut self, other: &Acc) {
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.sq_re[i] += other.sq_re[i];
            self.sq_im[i] += other.sq_im[i];
        }
        self.count += other.count;
    }
}

/// Run `f` on `workers` threads, preserving input order.
pub fn parallel_map<T, R, F>(workers: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if workers <= 1 {
        return items.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
        Err(_) => items.into_iter().map(f).collect(),
    }
}

/// Means of a fixed-width vector of sampled quantities.
pub fn mc_means<F>(cfg: &McConfig, width: usize, f: F) -> Result<Vec<McMean>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<Complex64>> + Sync + Send,
{
    let n_chunks = cfg.samples.div_ceil(CHUNK);
    let chunks: Vec<usize> = (0..n_chunks).collect();
    let partial = parallel_map(cfg.workers, chunks, |c| -> Result<Acc> {
        let mut rng = stream(cfg.seed, c as u64);
        let len = CHUNK.min(cfg.samples - c * CHUNK);
        let mut acc = Acc::new(width);
        for _ in 0..len {
            acc.push(&f(&mut rng)?)?;
        }
        Ok(acc)
    });
    let mut total = Acc::new(width);
    for acc in partial {
        total.merge(&acc?);
    }
    let n = total.count as f64;
    Ok((0..width)
        .map(|i| {
            let mean = total.sum[i] / n;
            let var_re = (total.sq_re[i] / n - mean.re * mean.re).max(0.0) * n / (n - 1.0);
            let var_im = (total.sq_im[i] / n - mean.im * mean.im).max(0.0) * n / (n - 1.0);
            McMean { mean, stderr: ((var_re + var_im) / n).sqrt(), samples: total.count }
        })
        .collect())
}

/// Mean of one sampled quantity.
pub fn mc_mean<F>(cfg: &McConfig, f: F) -> Result<McMean>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Complex64> + Sync + Send,
{
    Ok(mc_means(cfg, 1, |rng| Ok(vec![f(rng)?]))?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn worker_count_does_not_change_result() {
        let f = |rng: &mut ChaCha8Rng| -> Result<Complex64> {
            let x: f64 = rng.sample(StandardNormal);
            Ok(Complex64::new(x * x, x))
        };
        let a = mc_mean(&McConfig::new(5000, 42, 1).unwrap(), f).unwrap();
        let b = mc_mean(&McConfig::new(5000, 42, 3).unwrap(), f).unwrap();
        assert_eq!(a, b);
        assert!((a.mean.re - 1.0).abs() < 4.0 * a.stderr);
        assert_eq!(a.samples, 5000);
    }
}
