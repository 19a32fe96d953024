//! Parameter grids over two axes.
//!
//! Each cell simulates `seeds` paths, counts back-to-back outbreaks Σ on
//! each, and evaluates the analytic Φ(−κ). A μ axis is realized by solving
//! for the `h` that gives the requested μ; σ axes split the total noise
//! equally between the two species.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::{simulate_events, System};
use crate::equilibrium::{h_for_mu, mu};
use crate::error::{Error, Result};
use crate::events::{count_n, repeated_outbreak_count, Channel, Thresholds};
use crate::integrator::SimConfig;
use crate::model::NondimParams;
use crate::normal_form::{repeated_spike_probability_or_limit, stoch_nf_coeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    H,
    Mu,
    Eps,
    /// Total noise `√(σ₁² + σ₂²)`, split equally.
    Sigma,
    Sigma1,
    Sigma2,
}

impl SweepParam {
    /// Application order: ε first (μ depends on it), then h or μ, then noise.
    fn rank(self) -> u8 {
        match self {
            SweepParam::Eps => 0,
            SweepParam::H => 1,
            SweepParam::Mu => 2,
            _ => 3,
        }
    }

    fn apply(self, p: &mut NondimParams, v: f64) -> Result<()> {
        match self {
            SweepParam::H => p.h = v,
            SweepParam::Mu => p.h = h_for_mu(p, v)?,
            SweepParam::Eps => p.eps = v,
            SweepParam::Sigma => (p.sigma1, p.sigma2) = split_sigma(v),
            SweepParam::Sigma1 => p.sigma1 = v,
            SweepParam::Sigma2 => p.sigma2 = v,
        }
        Ok(())
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "h" => SweepParam::H,
            "mu" => SweepParam::Mu,
            "eps" => SweepParam::Eps,
            "sigma" => SweepParam::Sigma,
            "sigma1" => SweepParam::Sigma1,
            "sigma2" => SweepParam::Sigma2,
            _ => return Err(Error::Parse(format!("unknown sweep parameter {s:?}"))),
        })
    }
}

/// `steps` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(param: SweepParam, min: f64, max: f64, steps: usize) -> Self {
        Self { param, min, max, steps }
    }

    /// A one-point axis.
    pub fn fixed(param: SweepParam, v: f64) -> Self {
        Self::new(param, v, v, 1)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + h * i as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.steps >= 1
            && self.min.is_finite()
            && self.max.is_finite()
            && (self.steps == 1 || self.max > self.min);
        if !ok {
            return Err(Error::InvalidParameter(format!("bad axis {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub axis1: Axis,
    pub axis2: Axis,
    pub base: NondimParams,
    /// Per-path settings; `seed` is the base of the seed schedule and
    /// `initial` the fallback start when no equilibrium is found.
    pub sim: SimConfig,
    pub seeds: usize,
    pub thresholds: Thresholds,
    pub channel: Channel,
}

impl SweepConfig {
    /// One path per cell on `[0, 200]`, prey channel.
    pub fn new(axis1: Axis, axis2: Axis, base: NondimParams) -> Self {
        Self {
            axis1,
            axis2,
            base,
            sim: SimConfig {
                t_end: 200.0,
                ..SimConfig::default()
            },
            seeds: 1,
            thresholds: Thresholds::prey(),
            channel: Channel::X,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        self.sim.validate()?;
        self.thresholds.validate()?;
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("seeds per cell must be at least 1".into()));
        }
        if self.axis1.param == self.axis2.param {
            return Err(Error::InvalidParameter("both axes sweep the same parameter".into()));
        }
        Ok(())
    }

    pub fn cell_params(&self, v1: f64, v2: f64) -> Result<NondimParams> {
        let mut p = self.base;
        let mut order = [(self.axis1.param, v1), (self.axis2.param, v2)];
        order.sort_by_key(|a| a.0.rank());
        for (param, v) in order {
            param.apply(&mut p, v)?;
        }
        p.validate_relaxed()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub i: usize,
    pub j: usize,
    pub axis1: f64,
    pub axis2: f64,
    pub h: f64,
    pub mu: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Σ for each seed in schedule order.
    pub sigma_per_seed: Vec<usize>,
    pub sigma_mean: f64,
    pub sigma_std: f64,
    pub phi_neg_kappa: Option<f64>,
    /// Mean N over all gaps of the cell, when any were observed.
    pub mean_n: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis1: Axis,
    pub axis2: Axis,
    /// Row-major over (axis1, axis2).
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.axis2.steps + j]
    }
}

/// `σ₁ = σ₂ = σ/√2`.
pub fn split_sigma(sigma_total: f64) -> (f64, f64) {
    let s = sigma_total / SQRT_2;
    (s, s)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn run_cell(cfg: &SweepConfig, index: usize, v1: f64, v2: f64) -> SweepCell {
    let (i, j) = (index / cfg.axis2.steps, index % cfg.axis2.steps);
    let mut cell = SweepCell {
        i,
        j,
        axis1: v1,
        axis2: v2,
        h: f64::NAN,
        mu: f64::NAN,
        sigma1: f64::NAN,
        sigma2: f64::NAN,
        sigma_per_seed: vec![],
        sigma_mean: f64::NAN,
        sigma_std: f64::NAN,
        phi_neg_kappa: None,
        mean_n: None,
        error: None,
    };
    let p = match cfg.cell_params(v1, v2) {
        Ok(p) => p,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    cell.h = p.h;
    cell.mu = mu(&p);
    cell.sigma1 = p.sigma1;
    cell.sigma2 = p.sigma2;
    cell.phi_neg_kappa = stoch_nf_coeffs(&p)
        .ok()
        .and_then(|c| repeated_spike_probability_or_limit(&c));

    let system = System::Original(p);
    let initial = system.default_initial(cfg.sim.initial);
    let (mut n_sum, mut n_count) = (0u64, 0usize);
    for k in 0..cfg.seeds {
        let seed = cfg
            .sim
            .seed
            .wrapping_add((index * cfg.seeds + k) as u64);
        let sim = SimConfig {
            seed,
            initial,
            ..cfg.sim
        };
        match simulate_events(&system, &sim, &cfg.thresholds, cfg.channel) {
            Ok((ev, _)) => {
                let ns = count_n(&ev);
                n_sum += ns.values.iter().sum::<u64>();
                n_count += ns.len();
                cell.sigma_per_seed.push(repeated_outbreak_count(&ns));
            }
            Err(e) => {
                cell.error = Some(e.to_string());
                return cell;
            }
        }
    }
    let s: Vec<f64> = cell.sigma_per_seed.iter().map(|&v| v as f64).collect();
    (cell.sigma_mean, cell.sigma_std) = mean_std(&s);
    if n_count > 0 {
        cell.mean_n = Some(n_sum as f64 / n_count as f64);
    }
    cell
}

/// Runs every cell. Failures are recorded per cell and do not stop the
/// sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let a1 = cfg.axis1.values();
    let a2 = cfg.axis2.values();
    let n2 = a2.len();
    let mut cells: Vec<SweepCell> = (0..a1.len() * n2)
        .into_par_iter()
        .map(|idx| run_cell(cfg, idx, a1[idx / n2], a2[idx % n2]))
        .collect();
    cells.sort_by_key(|c| (c.i, c.j));
    Ok(SweepResult {
        axis1: cfg.axis1,
        axis2: cfg.axis2,
        cells,
    })
}

/// Average ranks (ties share the mean rank), starting at 1.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; NaN when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman correlation of Σ (for seed `k`) against the axis values along
/// `axis` (1 or 2), one value per line of the other axis.
pub fn axis_trend(res: &SweepResult, axis: usize, k: usize) -> Vec<f64> {
    let (n1, n2) = (res.axis1.steps, res.axis2.steps);
    let line = |fixed: usize| -> Option<f64> {
        let cells: Vec<&SweepCell> = if axis == 1 {
            (0..n1).map(|i| res.cell(i, fixed)).collect()
        } else {
            (0..n2).map(|j| res.cell(fixed, j)).collect()
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for c in cells {
            let s = *c.sigma_per_seed.get(k)?;
            xs.push(if axis == 1 { c.axis1 } else { c.axis2 });
            ys.push(s as f64);
        }
        Some(spearman(&xs, &ys))
    };
    let lines = if axis == 1 { n2 } else { n1 };
    (0..lines).filter_map(line).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        assert_eq!(split_sigma(0.0), (0.0, 0.0));
        let (a, b) = split_sigma(0.0219);
        assert_eq!(a, b);
        assert!((a - 0.015_485_6).abs() < 1e-6);
        assert!(((a * a + b * b).sqrt() - 0.0219).abs() < 1e-12);
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 9.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 0.0]) + 1.0).abs() < 1e-12);
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_nan());
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis::new(SweepParam::H, 0.8, 0.9, 3).values().len(), 3);
        assert_eq!(Axis::fixed(SweepParam::H, 0.9).values(), vec![0.9]);
    }

    #[test]
    fn mu_axis_maps_through_h() {
        let cfg = SweepConfig::new(
            Axis::fixed(SweepParam::Mu, 0.02),
            Axis::fixed(SweepParam::Sigma, 0.02),
            NondimParams::default(),
        );
        let p = cfg.cell_params(0.02, 0.02).unwrap();
        assert!((mu(&p) - 0.02).abs() < 1e-10);
        assert!((p.sigma1 - 0.02 / SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn same_param_twice_rejected() {
        let a = Axis::new(SweepParam::H, 0.88, 0.9, 2);
        assert!(SweepConfig::new(a, a, NondimParams::default()).validate().is_err());
    }
}
