//! Many independent paths, streamed straight into the event detector.
//!
//! Path `i` uses seed `base + i`. Paths run on the rayon pool and results are
//! returned sorted by path index, so aggregates do not depend on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::solve_equilibrium;
use crate::error::Result;
use crate::events::{count_n, Channel, EventDetector, EventKind, EventSeq, NSamples, Thresholds};
use crate::integrator::{sde_visit, stochastic_nf_visit, PredatorPrey, RunStats, Scheme, SimConfig};
use crate::model::NondimParams;
use crate::normal_form::StochNFCoeffs;
use crate::rng::path_seed;

/// Which stochastic system to simulate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    /// The predator-prey model, Milstein scheme.
    Original(NondimParams),
    /// The stochastic normal form.
    NormalForm(StochNFCoeffs),
}

impl System {
    /// The channel and thresholds normally used with this system.
    pub fn default_detection(&self) -> (Channel, Thresholds) {
        match self {
            System::Original(_) => (Channel::X, Thresholds::prey()),
            System::NormalForm(_) => (Channel::Z, Thresholds::normal_form()),
        }
    }

    /// Equilibrium for the original model (falling back to `fallback` when
    /// it cannot be solved), `(0, ½)` for the normal form.
    pub fn default_initial(&self, fallback: [f64; 2]) -> [f64; 2] {
        match self {
            System::Original(p) => solve_equilibrium(p).map(|e| [e.x, e.y]).unwrap_or(fallback),
            System::NormalForm(_) => [0.0, 0.5],
        }
    }
}

/// Simulates one path and classifies its oscillations on the fly.
///
/// The detector sees the states a recorded trajectory with the same
/// `record_stride` would hold, so the result equals [`detect_events`] on
/// that trajectory.
///
/// [`detect_events`]: crate::events::detect_events
pub fn simulate_events(
    system: &System,
    cfg: &SimConfig,
    th: &Thresholds,
    channel: Channel,
) -> Result<(EventSeq, RunStats)> {
    let mut det = EventDetector::new(*th);
    let (stride, last) = (cfg.record_stride.max(1), cfg.steps());
    let mut i = 0usize;
    let mut visit = |t: f64, u: [f64; 2]| {
        if i.is_multiple_of(stride) || i == last {
            det.push(t, channel.value(u));
        }
        i += 1;
    };
    let stats = match system {
        System::Original(p) => sde_visit(&PredatorPrey(*p), cfg, Scheme::Milstein, &mut visit)?,
        System::NormalForm(c) => stochastic_nf_visit(c, cfg, &mut visit)?,
    };
    Ok((det.finish(), stats))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathOutcome {
    pub index: usize,
    pub seed: u64,
    pub n: NSamples,
    pub lao: usize,
    pub sao: usize,
    pub unresolved: usize,
    pub steps: usize,
    pub clamp_events: u64,
    /// Set when the path failed; counts are then empty.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig {
    pub system: System,
    /// `seed` is the base seed.
    pub sim: SimConfig,
    pub paths: usize,
    pub thresholds: Thresholds,
    pub channel: Channel,
}

impl BatchConfig {
    pub fn new(system: System, sim: SimConfig, paths: usize) -> Self {
        let (channel, thresholds) = system.default_detection();
        Self {
            system,
            sim,
            paths,
            thresholds,
            channel,
        }
    }
}

pub fn run_path(cfg: &BatchConfig, index: usize) -> PathOutcome {
    let seed = path_seed(cfg.sim.seed, index as u64);
    let sim = cfg.sim.with_seed(seed);
    match simulate_events(&cfg.system, &sim, &cfg.thresholds, cfg.channel) {
        Ok((ev, stats)) => PathOutcome {
            index,
            seed,
            n: count_n(&ev),
            lao: ev.count(EventKind::Lao),
            sao: ev.count(EventKind::Sao),
            unresolved: ev.count(EventKind::Unresolved),
            steps: stats.steps,
            clamp_events: stats.clamp_events,
            error: None,
        },
        Err(e) => PathOutcome {
            index,
            seed,
            n: NSamples::default(),
            lao: 0,
            sao: 0,
            unresolved: 0,
            steps: 0,
            clamp_events: 0,
            error: Some(e.to_string()),
        },
    }
}

pub fn run_batch(cfg: &BatchConfig) -> Result<Vec<PathOutcome>> {
    cfg.sim.validate()?;
    cfg.thresholds.validate()?;
    let mut out: Vec<PathOutcome> = (0..cfg.paths).into_par_iter().map(|i| run_path(cfg, i)).collect();
    out.sort_by_key(|o| o.index);
    Ok(out)
}

/// All N samples of a batch, in path order.
pub fn pooled_samples(outcomes: &[PathOutcome]) -> NSamples {
    let mut ns = NSamples::default();
    for o in outcomes {
        ns.extend(&o.n);
    }
    ns
}

/// Fraction of steps with a clamp event, over all successful paths.
pub fn clamp_rate(outcomes: &[PathOutcome]) -> f64 {
    let steps: usize = outcomes.iter().map(|o| o.steps).sum();
    let clamps: u64 = outcomes.iter().map(|o| o.clamp_events).sum();
    if steps == 0 {
        0.0
    } else {
        clamps as f64 / steps as f64
    }
}
