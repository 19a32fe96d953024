//! Argument groups shared by several subcommands.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use mmo_core::events::{Channel, Thresholds};
use mmo_core::integrator::SimConfig;
use mmo_core::model::{load_params, NondimParams};

#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    /// JSON parameter file with nondimensional (beta, d, h, eps, sigma1,
    /// sigma2) or dimensional (r, K, p, H, b, e, m, zeta1, zeta2) keys.
    #[arg(long, short = 'p')]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Sets both noise intensities.
    #[arg(long, conflicts_with_all = ["sigma1", "sigma2"])]
    pub sigma: Option<f64>,
    /// Accept eps up to 1 with a warning instead of rejecting eps >= 0.25.
    #[arg(long)]
    pub allow_large_eps: bool,
}

impl ParamArgs {
    /// File values (or the defaults), then command-line overrides.
    pub fn resolve(&self) -> Result<NondimParams> {
        let mut p = match &self.params {
            Some(path) => load_params(path).with_context(|| format!("reading {}", path.display()))?,
            None => NondimParams::default(),
        };
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.beta, self.beta);
        set(&mut p.d, self.d);
        set(&mut p.h, self.h);
        set(&mut p.eps, self.eps);
        set(&mut p.sigma1, self.sigma1.or(self.sigma));
        set(&mut p.sigma2, self.sigma2.or(self.sigma));
        self.check(&p)?;
        Ok(p)
    }

    pub fn check(&self, p: &NondimParams) -> Result<()> {
        if self.allow_large_eps {
            p.validate_relaxed()?;
        } else {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value_t = 500.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Base seed; path i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    /// Keep every n-th step.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Initial state "a,b"; defaults to the equilibrium (or (0, 0.5) for
    /// the normal form).
    #[arg(long, value_parser = parse_pair)]
    pub initial: Option<[f64; 2]>,
}

impl RunArgs {
    pub fn sim(&self, initial: [f64; 2]) -> SimConfig {
        SimConfig::new(self.t_end, self.seed, self.initial.unwrap_or(initial))
            .with_dt(self.dt)
            .with_stride(self.stride)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelArg {
    X,
    Z,
    NegZ,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::X => Channel::X,
            ChannelArg::Z => Channel::Z,
            ChannelArg::NegZ => Channel::NegZ,
        }
    }
}

/// Threshold overrides; unset values keep the defaults of the channel.
#[derive(Args, Debug, Clone)]
pub struct DetectArgs {
    /// LAO peak threshold.
    #[arg(long)]
    pub m_t: Option<f64>,
    /// Minimal oscillation amplitude.
    #[arg(long)]
    pub a_t: Option<f64>,
    /// LAO amplitude threshold.
    #[arg(long)]
    pub a_t_prime: Option<f64>,
    /// Also require SAO amplitudes to stay at or below a_t'.
    #[arg(long)]
    pub banded: bool,
}

impl DetectArgs {
    pub fn apply(&self, base: Thresholds) -> Result<Thresholds> {
        let th = Thresholds {
            m_t: self.m_t.unwrap_or(base.m_t),
            a_t: self.a_t.unwrap_or(base.a_t),
            a_t_prime: self.a_t_prime.unwrap_or(base.a_t_prime),
            banded: self.banded || base.banded,
        };
        th.validate()?;
        Ok(th)
    }
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts[..] {
        [a, b] => Ok([
            a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?,
            b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?,
        ]),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number {x:?}")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("empty list");
    }
    Ok(v)
}
