//! Statistics of the inter-spike count N.
//!
//! The law of N is asymptotically geometric: `P{N = n+1 | N > n} → 1 − λ₀`.
//! λ₀ is estimated two ways. The tail estimator fits a weighted least-squares
//! line to `log P̂{N > n}` for `n ≥ n_min`; the pgf estimator scans the
//! empirical generating function `E θ^N` and reports `1/θ` at the first grid
//! point where its derivative exceeds a threshold.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::NSamples;
use crate::rng::{path_seed, GaussianStream};

/// Samples with `N ≥ n_min` needed for a tail fit.
pub const MIN_TAIL_SAMPLES: usize = 50;
/// Survival counts below this are too noisy to enter the regression.
const MIN_SURVIVORS: u64 = 5;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Unit-width histogram: `counts[i]` samples equal `edges[i]`, and the bin
/// is `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<u64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn new(values: &[u64]) -> Self {
        let max = values.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut counts = vec![0u64; max];
        for &v in values {
            counts[v as usize] += 1;
        }
        Self {
            edges: (0..=max as u64).collect(),
            counts,
            total: values.len() as u64,
        }
    }

    pub fn pmf(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// `#{N > n}` for each bin.
    pub fn survivors(&self) -> Vec<u64> {
        let mut s = vec![0u64; self.counts.len()];
        let mut acc = 0u64;
        for i in (0..self.counts.len()).rev() {
            s[i] = acc;
            acc += self.counts[i];
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub histogram: Histogram,
}

pub fn summarize(ns: &NSamples) -> Result<Summary> {
    let n = ns.values.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            available: n,
        });
    }
    let mean = ns.values.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let ss = ns.values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>();
    Ok(Summary {
        mean,
        std: (ss / (n - 1) as f64).sqrt(),
        histogram: Histogram::new(&ns.values),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    TailHazard,
    PgfPole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricFit {
    pub lambda0: f64,
    pub method: FitMethod,
    pub n_min: u64,
    /// Bootstrap standard error; NaN if too few resamples succeeded.
    pub std_error: f64,
}

/// Tail fit together with the pooled hazard estimate
/// `1 − Σ#{N = n+1} / Σ#{N > n}` over `n ≥ n_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub fit: GeometricFit,
    pub lambda0_hazard: f64,
}

/// Lower sample median, the default tail cutoff.
pub fn default_n_min(ns: &NSamples) -> u64 {
    if ns.values.is_empty() {
        return 0;
    }
    let mut v = ns.values.clone();
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}

fn tail_point_estimates(values: &[u64], n_min: u64) -> Result<(f64, f64)> {
    let available = values.iter().filter(|&&v| v >= n_min).count();
    let insufficient = || Error::InsufficientTail {
        n_min,
        required: MIN_TAIL_SAMPLES,
        available,
    };
    if available < MIN_TAIL_SAMPLES {
        return Err(insufficient());
    }
    let h = Histogram::new(values);
    let surv = h.survivors();
    let total = h.total as f64;

    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut points = 0;
    let (mut exits, mut at_risk) = (0u64, 0u64);
    for (n, &k) in surv.iter().enumerate().skip(n_min as usize) {
        if k >= MIN_SURVIVORS {
            let s = k as f64 / total;
            let w = k as f64 / (1.0 - s);
            let x = n as f64;
            let y = s.ln();
            sw += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
            points += 1;
        }
        at_risk += k;
        exits += h.counts.get(n + 1).copied().unwrap_or(0);
    }
    if points < 2 {
        return Err(insufficient());
    }
    let slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    let lambda = slope.exp();
    if !(lambda > 0.0 && lambda < 1.0) || at_risk == 0 {
        return Err(insufficient());
    }
    Ok((lambda, 1.0 - exits as f64 / at_risk as f64))
}

fn resample(values: &[u64], seed: u64) -> Vec<u64> {
    let mut g = GaussianStream::new(seed);
    let n = values.len();
    (0..n)
        .map(|_| values[((g.uniform() * n as f64) as usize).min(n - 1)])
        .collect()
}

fn bootstrap_se<F>(values: &[u64], seed: u64, estimate: F) -> f64
where
    F: Fn(&[u64]) -> Option<f64> + Sync,
{
    let mut reps: Vec<(usize, f64)> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .filter_map(|i| estimate(&resample(values, path_seed(seed, i as u64))).map(|v| (i, v)))
        .collect();
    reps.sort_by_key(|r| r.0);
    if reps.len() < BOOTSTRAP_RESAMPLES / 2 {
        return f64::NAN;
    }
    let m = reps.iter().map(|r| r.1).sum::<f64>() / reps.len() as f64;
    (reps.iter().map(|r| (r.1 - m).powi(2)).sum::<f64>() / (reps.len() - 1) as f64).sqrt()
}

/// Tail estimate of λ₀ from samples with `N ≥ n_min`, with a bootstrap
/// standard error drawn from `seed`.
pub fn estimate_lambda0(ns: &NSamples, n_min: u64, seed: u64) -> Result<TailEstimate> {
    let (lambda0, hazard) = tail_point_estimates(&ns.values, n_min)?;
    let se = bootstrap_se(&ns.values, seed, |v| tail_point_estimates(v, n_min).ok().map(|e| e.0));
    Ok(TailEstimate {
        fit: GeometricFit {
            lambda0,
            method: FitMethod::TailHazard,
            n_min,
            std_error: se,
        },
        lambda0_hazard: hazard,
    })
}

/// Empirical `E θ^N`, with `0⁰ = 1`.
pub fn pgf(ns: &NSamples, theta: f64) -> f64 {
    if ns.values.is_empty() {
        return f64::NAN;
    }
    ns.values.iter().map(|&n| theta.powi(n as i32)).sum::<f64>() / ns.values.len() as f64
}

/// Settings of the pgf-pole scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgfScan {
    pub step: f64,
    pub threshold: f64,
    /// The scan gives up beyond this θ.
    pub theta_max: f64,
}

impl Default for PgfScan {
    fn default() -> Self {
        Self {
            step: 0.01,
            threshold: 50.0,
            theta_max: 20.0,
        }
    }
}

/// Smallest grid point θ where `(pgf(θ + step) − pgf(θ))/step` exceeds the
/// threshold.
pub fn pgf_divergence_point(ns: &NSamples, scan: &PgfScan) -> Option<f64> {
    if ns.values.is_empty() {
        return None;
    }
    let steps = (scan.theta_max / scan.step).ceil() as usize;
    let mut prev = pgf(ns, 0.0);
    for i in 0..steps {
        let theta = i as f64 * scan.step;
        let next = pgf(ns, theta + scan.step);
        if (next - prev) / scan.step > scan.threshold {
            return Some(theta);
        }
        prev = next;
    }
    None
}

fn pgf_lambda(values: &[u64], scan: &PgfScan) -> Option<f64> {
    let ns = NSamples::from_values(values.to_vec());
    pgf_divergence_point(&ns, scan)
        .filter(|&t| t > 1.0)
        .map(|t| 1.0 / t)
}

/// λ₀ as the reciprocal of the pgf divergence point.
pub fn estimate_lambda0_pgf(ns: &NSamples, scan: &PgfScan, seed: u64) -> Option<GeometricFit> {
    let lambda0 = pgf_lambda(&ns.values, scan)?;
    Some(GeometricFit {
        lambda0,
        method: FitMethod::PgfPole,
        n_min: 0,
        std_error: bootstrap_se(&ns.values, seed, |v| pgf_lambda(v, scan)),
    })
}

/// `(1 − λ₀) λ₀ⁿ` for `n = 0..=n_max`.
pub fn geometric_overlay(lambda0: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda0 must lie in (0, 1), got {lambda0}"
        )));
    }
    Ok((0..=n_max).map(|n| (1.0 - lambda0) * lambda0.powi(n as i32)).collect())
}

/// `½ Σ_{n ≥ from} |p̂(n) − (1−λ₀)λ₀ⁿ|`, including the geometric mass beyond
/// the largest observed N.
pub fn tail_total_variation(hist: &Histogram, lambda0: f64, from: usize) -> Result<f64> {
    let emp = hist.pmf();
    let geo = geometric_overlay(lambda0, emp.len())?;
    let mut tv: f64 = (from..emp.len()).map(|n| (emp[n] - geo[n]).abs()).sum();
    tv += lambda0.powi(emp.len().max(from) as i32);
    Ok(0.5 * tv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric_samples(lambda: f64, n: usize, seed: u64) -> NSamples {
        let mut g = GaussianStream::new(seed);
        let ln = lambda.ln();
        NSamples::from_values((0..n).map(|_| (g.uniform().ln() / ln).floor() as u64).collect())
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&NSamples::from_values(vec![3, 3, 3])).unwrap();
        assert_eq!((s.mean, s.std), (3.0, 0.0));
        let s = summarize(&NSamples::from_values(vec![0, 1, 2, 3])).unwrap();
        assert_eq!(s.mean, 1.5);
        assert!((s.std - 1.290_994_448_735_806).abs() < 1e-12);
        assert_eq!(s.histogram.counts, vec![1, 1, 1, 1]);
        assert_eq!(s.histogram.edges, vec![0, 1, 2, 3, 4]);
        assert!(matches!(
            summarize(&NSamples::from_values(vec![1])),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn pgf_normalization() {
        let ns = NSamples::from_values(vec![0, 2, 0, 5]);
        assert_eq!(pgf(&ns, 1.0), 1.0);
        assert_eq!(pgf(&ns, 0.0), 0.5);
    }

    #[test]
    fn all_zero_has_no_tail() {
        let ns = NSamples::from_values(vec![0; 500]);
        assert!(matches!(
            estimate_lambda0(&ns, default_n_min(&ns), 0),
            Err(Error::InsufficientTail { .. })
        ));
    }

    #[test]
    fn geometric_oracle() {
        let ns = geometric_samples(0.5, 100_000, 9);
        let tail = estimate_lambda0(&ns, default_n_min(&ns), 1).unwrap();
        assert!((tail.fit.lambda0 - 0.5).abs() < 0.02, "{:?}", tail);
        assert!((tail.lambda0_hazard - 0.5).abs() < 0.02);
        let theta = pgf_divergence_point(&ns, &PgfScan::default()).unwrap();
        assert!((theta - 2.0).abs() < 0.2, "{theta}");
    }

    #[test]
    fn overlay_values() {
        let g = geometric_overlay(0.5, 3).unwrap();
        assert_eq!(g, vec![0.5, 0.25, 0.125, 0.0625]);
        for l in [0.1, 0.3, 0.6] {
            let s: f64 = geometric_overlay(l, 50).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
        assert!(geometric_overlay(1.0, 3).is_err());
    }

    #[test]
    fn total_variation_of_exact_law_is_small() {
        let ns = geometric_samples(0.6, 200_000, 4);
        let h = Histogram::new(&ns.values);
        assert!(tail_total_variation(&h, 0.6, 3).unwrap() < 0.01);
        assert!(tail_total_variation(&h, 0.3, 3).unwrap() > 0.05);
    }
}
