//! Ensemble statistics with scheduling-independent reductions.
//!
//! Samples are grouped into fixed index chunks; each chunk runs a sequential
//! Welford pass and the chunk summaries are merged in chunk order. The result
//! is bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::algebra::Multivector;
use crate::error::{Error, Result};

/// Items per reduction chunk.
pub const CHUNK: usize = 256;

/// Componentwise running mean and centred second moment.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    n: usize,
    skipped: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(width: usize) -> Self {
        Moments {
            n: 0,
            skipped: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn push(&mut self, sample: &[f64]) {
        debug_assert_eq!(sample.len(), self.mean.len());
        self.n += 1;
        let k = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let delta = x - *m;
            *m += delta / k;
            *s += delta * (x - *m);
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Pairwise (Chan et al.) merge of another summary into this one.
    pub fn merge(&mut self, other: &Moments) {
        self.skipped += other.skipped;
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            self.n = other.n;
            self.mean.clone_from(&other.mean);
            self.m2.clone_from(&other.m2);
            return;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * (nb / n);
            self.m2[i] += other.m2[i] + delta * delta * (na * nb / n);
        }
        self.n += other.n;
    }

    /// Summary restricted to the first `width` components.
    pub fn truncated(&self, width: usize) -> Moments {
        let w = width.min(self.mean.len());
        Moments {
            n: self.n,
            skipped: self.skipped,
            mean: self.mean[..w].to_vec(),
            m2: self.m2[..w].to_vec(),
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Samples excluded from the statistics (censored).
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self, i: usize) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2[i] / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self, i: usize) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance(i) / self.n as f64).sqrt()
        }
    }

    pub fn stderrs(&self) -> Vec<f64> {
        (0..self.width()).map(|i| self.stderr(i)).collect()
    }
}

/// Runs `sample(i, out)` for every `i < n_items` in parallel and reduces the
/// `width`-wide outputs in fixed chunk order. Returning `Ok(false)` marks the
/// item as censored.
pub fn try_chunked_moments<F>(n_items: usize, width: usize, sample: F) -> Result<Moments>
where
    F: Fn(usize, &mut [f64]) -> Result<bool> + Sync,
{
    let n_chunks = n_items.div_ceil(CHUNK);
    let partials: Vec<Result<Moments>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Moments::new(width);
            let mut buf = vec![0.0; width];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_items) {
                if sample(i, &mut buf)? {
                    acc.push(&buf);
                } else {
                    acc.skip();
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::new(width);
    for p in partials {
        total.merge(&p?);
    }
    Ok(total)
}

/// Infallible variant of [`try_chunked_moments`].
pub fn chunked_moments<F>(n_items: usize, width: usize, sample: F) -> Moments
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    try_chunked_moments(n_items, width, |i, out| {
        sample(i, out);
        Ok(true)
    })
    .expect("infallible sampler")
}

/// Monte Carlo estimate of a Clifford-valued expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: Multivector,
    /// Componentwise standard error, indexed like the coefficients.
    pub stderr: Vec<f64>,
    pub n: usize,
}

impl MCEstimate {
    pub fn from_moments(dim: usize, moments: &Moments) -> Result<Self> {
        if moments.width() != 1 << dim {
            return Err(Error::CoefficientCount {
                expected: 1 << dim,
                got: moments.width(),
            });
        }
        Ok(MCEstimate {
            mean: Multivector::from_coeffs(dim, moments.means().to_vec())?,
            stderr: moments.stderrs(),
            n: moments.count(),
        })
    }

    /// True when every coefficient satisfies `|mean - target| <= k * stderr`.
    pub fn within_sigma(&self, target: &Multivector, k: f64) -> bool {
        self.mean
            .coeffs()
            .iter()
            .zip(target.coeffs())
            .zip(&self.stderr)
            .all(|((m, t), s)| (m - t).abs() <= k * s)
    }

    /// Largest `|mean - target| / stderr` over coefficients; zero-stderr
    /// coefficients count as infinite unless they match exactly.
    pub fn max_z(&self, target: &Multivector) -> f64 {
        self.mean
            .coeffs()
            .iter()
            .zip(target.coeffs())
            .zip(&self.stderr)
            .map(|((m, t), s)| {
                let d = (m - t).abs();
                if d == 0.0 {
                    0.0
                } else if *s == 0.0 {
                    f64::INFINITY
                } else {
                    d / s
                }
            })
            .fold(0.0, f64::max)
    }
}

impl Serialize for MCEstimate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Component {
            blade: usize,
            mean: f64,
            stderr: f64,
        }
        #[derive(Serialize)]
        struct Repr {
            dim: usize,
            sample_count: usize,
            components: Vec<Component>,
        }
        Repr {
            dim: self.mean.dim(),
            sample_count: self.n,
            components: self
                .mean
                .coeffs()
                .iter()
                .zip(&self.stderr)
                .enumerate()
                .map(|(blade, (&mean, &stderr))| Component { blade, mean, stderr })
                .collect(),
        }
        .serialize(serializer)
    }
}

/// Mean and standard error of a real-valued Monte Carlo quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl ScalarEstimate {
    pub fn from_moments(m: &Moments, i: usize) -> Self {
        ScalarEstimate {
            mean: m.mean(i),
            stderr: m.stderr(i),
            n: m.count(),
        }
    }

    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Result of a two-sample Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS statistic with the asymptotic Kolmogorov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Least-squares slope of `ys` against `xs`; `None` with fewer than two points.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_exact_mean_and_zero_stderr() {
        let m = chunked_moments(10_000, 2, |_, out| {
            out[0] = 0.1;
            out[1] = -3.7;
        });
        assert_eq!(m.mean(0), 0.1);
        assert_eq!(m.mean(1), -3.7);
        assert_eq!(m.stderr(0), 0.0);
    }

    #[test]
    fn chunked_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 37.0).collect();
        let m = chunked_moments(xs.len(), 1, |i, out| out[0] = xs[i]);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((m.mean(0) - mean).abs() < 1e-12);
        assert!((m.variance(0) - var).abs() < 1e-9);
    }

    #[test]
    fn reduction_is_thread_count_independent() {
        let f = |i: usize, out: &mut [f64]| out[0] = ((i as f64) * 0.37).sin();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| chunked_moments(5000, 1, f));
        let three = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| chunked_moments(5000, 1, f));
        assert_eq!(one, three);
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_samples() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..200).map(|i| 1000.0 + i as f64).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x + 2.0).collect();
        assert!((ols_slope(&xs, &ys).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(ols_slope(&xs[..1], &ys[..1]), None);
    }
}
