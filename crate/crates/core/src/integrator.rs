//! Fixed-step integrators.
//!
//! Deterministic fields use classical RK4. Stochastic systems with diagonal
//! noise use Milstein (or Euler–Maruyama for comparison); the stochastic
//! normal form uses a mixed scheme described on [`stochastic_nf_path`].
//! All steppers draw their Brownian increments from a
//! [`GaussianStream`](crate::rng::GaussianStream), `dB₁` before `dB₂` at each
//! step, so a path is a pure function of its parameters and config.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{diffusion, drift, FieldVariant, NondimParams, State};
use crate::normal_form::{nf_field, reduced_field, NFConstants, StochNFCoeffs};
use crate::rng::GaussianStream;

/// Autonomous planar vector field.
pub trait VectorField {
    fn eval(&self, u: [f64; 2]) -> [f64; 2];
}

#[inline]
fn axpy(u: [f64; 2], a: f64, k: [f64; 2]) -> [f64; 2] {
    [u[0] + a * k[0], u[1] + a * k[1]]
}

/// One classical Runge–Kutta step.
#[inline]
pub fn rk4_step<F: VectorField + ?Sized>(f: &F, u: [f64; 2], dt: f64) -> [f64; 2] {
    let k1 = f.eval(u);
    let k2 = f.eval(axpy(u, 0.5 * dt, k1));
    let k3 = f.eval(axpy(u, 0.5 * dt, k2));
    let k4 = f.eval(axpy(u, dt, k3));
    [
        u[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        u[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Deterministic fields available to [`rk4_path`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    /// The predator-prey field in `(x, y)`.
    Original(NondimParams),
    /// The same field on the rescaled clock `dt ↦ (β + x) dt`.
    TimeRescaled(NondimParams),
    /// The full normal form in `(l, z)`.
    NormalForm(NFConstants),
    /// The normal form without ε-terms, with its own μ.
    Reduced { k: NFConstants, mu: f64 },
}

impl Field {
    pub fn coords(&self) -> Coords {
        match self {
            Field::Original(_) | Field::TimeRescaled(_) => Coords::Xy,
            _ => Coords::Lz,
        }
    }

    fn params(&self) -> NondimParams {
        match self {
            Field::Original(p) | Field::TimeRescaled(p) => *p,
            Field::NormalForm(k) | Field::Reduced { k, .. } => k.params(),
        }
    }
}

impl VectorField for Field {
    #[inline]
    fn eval(&self, u: [f64; 2]) -> [f64; 2] {
        match self {
            Field::Original(p) => drift(State::from(u), p, FieldVariant::Full),
            Field::TimeRescaled(p) => drift(State::from(u), p, FieldVariant::TimeRescaled),
            Field::NormalForm(k) => nf_field(u[0], u[1], k),
            Field::Reduced { k, mu } => reduced_field(u[0], u[1], *mu, k),
        }
    }
}

/// SDE `du = a(u) dt + diag(b(u)) dB` where each `bᵢ` depends on `uᵢ` only.
pub trait DiagonalSde {
    fn drift(&self, u: [f64; 2]) -> [f64; 2];
    fn diffusion(&self, u: [f64; 2]) -> [f64; 2];
    /// `bᵢ ∂bᵢ/∂uᵢ` for each component.
    fn milstein_term(&self, u: [f64; 2]) -> [f64; 2];
    /// Whether negative components are reset to zero after each step.
    fn nonnegative(&self) -> bool {
        false
    }
}

/// The stochastic predator-prey system.
#[derive(Debug, Clone, Copy)]
pub struct PredatorPrey(pub NondimParams);

impl DiagonalSde for PredatorPrey {
    #[inline]
    fn drift(&self, u: [f64; 2]) -> [f64; 2] {
        drift(State::from(u), &self.0, FieldVariant::Full)
    }

    #[inline]
    fn diffusion(&self, u: [f64; 2]) -> [f64; 2] {
        diffusion(State::from(u), &self.0)
    }

    #[inline]
    fn milstein_term(&self, u: [f64; 2]) -> [f64; 2] {
        let p = &self.0;
        [p.sigma1 * p.sigma1 * u[0] / p.eps, p.sigma2 * p.sigma2 * u[1]]
    }

    fn nonnegative(&self) -> bool {
        true
    }
}

/// Two uncoupled geometric Brownian motions `dX = aX dt + bX dB`, with
/// exact solution `X₀ exp((a − b²/2)t + bB_t)`.
#[derive(Debug, Clone, Copy)]
pub struct GeometricBrownian {
    pub a: f64,
    pub b: f64,
}

impl GeometricBrownian {
    pub fn exact(&self, x0: f64, t: f64, bt: f64) -> f64 {
        x0 * ((self.a - 0.5 * self.b * self.b) * t + self.b * bt).exp()
    }
}

impl DiagonalSde for GeometricBrownian {
    fn drift(&self, u: [f64; 2]) -> [f64; 2] {
        [self.a * u[0], self.a * u[1]]
    }

    fn diffusion(&self, u: [f64; 2]) -> [f64; 2] {
        [self.b * u[0], self.b * u[1]]
    }

    fn milstein_term(&self, u: [f64; 2]) -> [f64; 2] {
        let b2 = self.b * self.b;
        [b2 * u[0], b2 * u[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[default]
    Milstein,
    EulerMaruyama,
}

/// One step of `scheme` with the given increments. Returns the new state and
/// the number of components clamped at zero.
#[inline]
pub fn sde_step<S: DiagonalSde + ?Sized>(
    sde: &S,
    u: [f64; 2],
    dt: f64,
    dw: [f64; 2],
    scheme: Scheme,
) -> ([f64; 2], u32) {
    let a = sde.drift(u);
    let b = sde.diffusion(u);
    let mut v = [
        u[0] + a[0] * dt + b[0] * dw[0],
        u[1] + a[1] * dt + b[1] * dw[1],
    ];
    if scheme == Scheme::Milstein {
        let m = sde.milstein_term(u);
        v[0] += 0.5 * m[0] * (dw[0] * dw[0] - dt);
        v[1] += 0.5 * m[1] * (dw[1] * dw[1] - dt);
    }
    let mut clamped = 0;
    if sde.nonnegative() {
        for c in v.iter_mut() {
            if *c < 0.0 {
                *c = 0.0;
                clamped += 1;
            }
        }
    }
    (v, clamped)
}

/// Terminal state after driving `sde` with prescribed increments.
pub fn sde_terminal_from_increments<S: DiagonalSde + ?Sized>(
    sde: &S,
    u0: [f64; 2],
    dt: f64,
    increments: &[[f64; 2]],
    scheme: Scheme,
) -> [f64; 2] {
    increments
        .iter()
        .fold(u0, |u, &dw| sde_step(sde, u, dt, dw, scheme).0)
}

/// Time-stepping options shared by all path generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Keep every `record_stride`-th step (the initial and final states are
    /// always kept).
    pub record_stride: usize,
    pub initial: [f64; 2],
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 500.0,
            seed: 0,
            record_stride: 1,
            initial: [0.4, 0.4],
        }
    }
}

impl SimConfig {
    pub fn new(t_end: f64, seed: u64, initial: [f64; 2]) -> Self {
        Self {
            t_end,
            seed,
            initial,
            ..Self::default()
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be at least dt, got {}",
                self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        if !(self.initial[0].is_finite() && self.initial[1].is_finite()) {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Coordinate labels of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coords {
    /// Prey and predator.
    Xy,
    /// Normal-form coordinates.
    Lz,
}

impl Coords {
    pub fn names(self) -> [&'static str; 2] {
        match self {
            Coords::Xy => ["x", "y"],
            Coords::Lz => ["l", "z"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
    pub coords: Coords,
    pub params: NondimParams,
    pub seed: u64,
    /// Steps actually taken.
    pub steps: usize,
    /// Number of component resets to zero.
    pub clamp_events: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One coordinate as a vector.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    pub fn last(&self) -> Option<[f64; 2]> {
        self.states.last().copied()
    }
}

/// Counters returned by [`drive`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub steps: usize,
    pub clamp_events: u64,
}

/// Runs `step` for `cfg.steps()` steps, calling `visit(i, t, u)` on the
/// initial state and after every step. Stops with the time of the first
/// non-finite state.
fn drive<St, V>(cfg: &SimConfig, mut step: St, mut visit: V) -> std::result::Result<RunStats, (f64, RunStats)>
where
    St: FnMut([f64; 2]) -> ([f64; 2], u32),
    V: FnMut(usize, f64, [f64; 2]),
{
    let n = cfg.steps();
    let mut u = cfg.initial;
    let mut stats = RunStats::default();
    visit(0, 0.0, u);
    for i in 1..=n {
        let (v, c) = step(u);
        let t = i as f64 * cfg.dt;
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err((t, stats));
        }
        u = v;
        stats.steps = i;
        stats.clamp_events += c as u64;
        visit(i, t, u);
    }
    Ok(stats)
}

fn record<St>(cfg: &SimConfig, coords: Coords, params: NondimParams, step: St) -> Result<Trajectory>
where
    St: FnMut([f64; 2]) -> ([f64; 2], u32),
{
    cfg.validate()?;
    let cap = cfg.steps() / cfg.record_stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(cap),
        states: Vec::with_capacity(cap),
        coords,
        params,
        seed: cfg.seed,
        steps: 0,
        clamp_events: 0,
    };
    let (stride, last) = (cfg.record_stride, cfg.steps());
    let res = drive(cfg, step, |i, t, u| {
        if i.is_multiple_of(stride) || i == last {
            traj.times.push(t);
            traj.states.push(u);
        }
    });
    match res {
        Ok(stats) => {
            traj.steps = stats.steps;
            traj.clamp_events = stats.clamp_events;
            Ok(traj)
        }
        Err((t, stats)) => {
            traj.steps = stats.steps;
            traj.clamp_events = stats.clamp_events;
            Err(Error::NonFinite {
                t,
                prefix: Box::new(traj),
            })
        }
    }
}

/// Streams a stochastic path of `sde` into `visit(t, u)` without storing it.
pub fn sde_visit<S, V>(sde: &S, cfg: &SimConfig, scheme: Scheme, mut visit: V) -> Result<RunStats>
where
    S: DiagonalSde + ?Sized,
    V: FnMut(f64, [f64; 2]),
{
    cfg.validate()?;
    let mut g = GaussianStream::new(cfg.seed);
    let sq = cfg.dt.sqrt();
    let dt = cfg.dt;
    drive(
        cfg,
        |u| sde_step(sde, u, dt, g.increment_pair(sq), scheme),
        |_, t, u| visit(t, u),
    )
    .map_err(|(t, _)| Error::NonFinite {
        t,
        prefix: Box::new(Trajectory {
            times: vec![],
            states: vec![],
            coords: Coords::Xy,
            params: NondimParams::default(),
            seed: cfg.seed,
            steps: 0,
            clamp_events: 0,
        }),
    })
}

/// Path of a diagonal-noise SDE.
pub fn sde_path<S: DiagonalSde + ?Sized>(
    sde: &S,
    params: NondimParams,
    cfg: &SimConfig,
    scheme: Scheme,
) -> Result<Trajectory> {
    let mut g = GaussianStream::new(cfg.seed);
    let sq = cfg.dt.sqrt();
    let dt = cfg.dt;
    record(cfg, Coords::Xy, params, |u| {
        sde_step(sde, u, dt, g.increment_pair(sq), scheme)
    })
}

/// Milstein path of the stochastic predator-prey system. Components that
/// step below zero are reset to zero and counted in `clamp_events`.
pub fn milstein_path(p: &NondimParams, cfg: &SimConfig) -> Result<Trajectory> {
    if cfg.initial[0] < 0.0 || cfg.initial[1] < 0.0 {
        return Err(Error::InvalidParameter("initial state must be nonnegative".into()));
    }
    sde_path(&PredatorPrey(*p), *p, cfg, Scheme::Milstein)
}

/// RK4 path of a deterministic field.
pub fn rk4_path(field: &Field, cfg: &SimConfig) -> Result<Trajectory> {
    let dt = cfg.dt;
    record(cfg, field.coords(), field.params(), |u| (rk4_step(field, u, dt), 0))
}

/// One step of the stochastic normal form.
///
/// The L-equation has a single noise source and gets the full Milstein
/// correction. In the Z-equation the B₁ coefficient depends on L alone, so
/// its Milstein term is `½ b_L1 ∂_L b_Z1 (ΔB₁² − Δt)`; the B₂ coefficient
/// gets the diagonal term `½ b_Z2 ∂_Z b_Z2 (ΔB₂² − Δt)`. The mixed term
/// `b_L1 ∂_L b_Z2` would need Lévy areas and is left out (Euler–Maruyama);
/// it is O(ε) relative to the leading noise.
#[inline]
pub fn stochastic_nf_step(c: &StochNFCoeffs, u: [f64; 2], dt: f64, dw: [f64; 2]) -> [f64; 2] {
    let [l, z] = u;
    let a = c.drift(l, z);
    let b = c.noise(l, z);
    let s = c.noise_slopes(l);
    let q1 = 0.5 * (dw[0] * dw[0] - dt);
    let q2 = 0.5 * (dw[1] * dw[1] - dt);
    [
        l + a[0] * dt + b[0][0] * dw[0] + b[0][0] * s[0] * q1,
        z + a[1] * dt
            + b[1][0] * dw[0]
            + b[1][1] * dw[1]
            + b[0][0] * s[1] * q1
            + b[1][1] * s[2] * q2,
    ]
}

/// Noise intensities in model units that correspond to `c`'s σ̂ᵢ.
fn unscaled_params(c: &StochNFCoeffs) -> NondimParams {
    let k = &c.k;
    let f = k.gamma * k.eps.powf(0.75) / k.c1;
    k.params().with_noise(c.sigma_hat1 * f, c.sigma_hat2 * f)
}

/// Path of the stochastic normal form in `(l, z)` on the normal-form clock.
pub fn stochastic_nf_path(coeffs: &StochNFCoeffs, cfg: &SimConfig) -> Result<Trajectory> {
    let mut g = GaussianStream::new(cfg.seed);
    let sq = cfg.dt.sqrt();
    let dt = cfg.dt;
    record(cfg, Coords::Lz, unscaled_params(coeffs), |u| {
        (stochastic_nf_step(coeffs, u, dt, g.increment_pair(sq)), 0)
    })
}

/// Streaming variant of [`stochastic_nf_path`].
pub fn stochastic_nf_visit<V>(coeffs: &StochNFCoeffs, cfg: &SimConfig, mut visit: V) -> Result<RunStats>
where
    V: FnMut(f64, [f64; 2]),
{
    cfg.validate()?;
    let mut g = GaussianStream::new(cfg.seed);
    let sq = cfg.dt.sqrt();
    let dt = cfg.dt;
    drive(
        cfg,
        |u| (stochastic_nf_step(coeffs, u, dt, g.increment_pair(sq)), 0),
        |_, t, u| visit(t, u),
    )
    .map_err(|(t, _)| Error::NonFinite {
        t,
        prefix: Box::new(Trajectory {
            times: vec![],
            states: vec![],
            coords: Coords::Lz,
            params: unscaled_params(coeffs),
            seed: cfg.seed,
            steps: 0,
            clamp_events: 0,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium;
    use crate::normal_form::{first_integral, nf_constants, stoch_nf_coeffs};

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig::default().with_dt(0.0).validate().is_err());
        assert!(SimConfig::default().with_stride(0).validate().is_err());
        let c = SimConfig {
            t_end: 1e-4,
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn stride_and_lengths() {
        let p = NondimParams::default();
        let cfg = SimConfig::new(1.0, 0, [0.4, 0.4]).with_stride(10);
        let t = rk4_path(&Field::Original(p), &cfg).unwrap();
        assert_eq!(t.len(), 101);
        assert_eq!(t.states.len(), t.times.len());
        assert!(t.times.windows(2).all(|w| w[1] > w[0]));
        assert!((t.times[100] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = NondimParams::default();
        let e = solve_equilibrium(&p).unwrap();
        let cfg = SimConfig::new(50.0, 0, [e.x, e.y]);
        let t = rk4_path(&Field::Original(p), &cfg).unwrap();
        let f = Field::Original(p);
        for s in t.states.iter().step_by(1000) {
            let d = f.eval(*s);
            assert!(d[0].abs() < 1e-10 && d[1].abs() < 1e-10);
        }
    }

    #[test]
    fn zero_noise_milstein_tracks_rk4() {
        let p = NondimParams::default().with_h(0.9);
        let cfg = SimConfig::new(50.0, 3, [0.36, 0.40]);
        let m = milstein_path(&p, &cfg).unwrap();
        let r = rk4_path(&Field::Original(p), &cfg).unwrap();
        let sup = m
            .states
            .iter()
            .zip(&r.states)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max);
        assert!(sup < 5e-3, "{sup}");
    }

    #[test]
    fn reproducible_and_seed_dependent() {
        let p = NondimParams::default().with_noise(0.01, 0.01);
        let cfg = SimConfig::new(5.0, 42, [0.38, 0.39]);
        let a = milstein_path(&p, &cfg).unwrap();
        let b = milstein_path(&p, &cfg).unwrap();
        assert_eq!(a, b);
        let c = milstein_path(&p, &cfg.with_seed(43)).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn clamping_keeps_states_nonnegative() {
        let p = NondimParams::default().with_noise(1.0, 1.0);
        let cfg = SimConfig::new(5.0, 1, [0.01, 0.01]);
        let t = milstein_path(&p, &cfg).unwrap();
        assert!(t.states.iter().all(|s| s[0] >= 0.0 && s[1] >= 0.0));
    }

    #[test]
    fn negative_initial_state_rejected() {
        let cfg = SimConfig::new(1.0, 0, [-0.1, 0.4]);
        assert!(milstein_path(&NondimParams::default(), &cfg).is_err());
    }

    #[test]
    fn non_finite_returns_prefix() {
        let p = NondimParams::default();
        let cfg = SimConfig::new(50.0, 0, [10.0, 10.0]).with_dt(0.5);
        match rk4_path(&Field::Original(p), &cfg) {
            Err(Error::NonFinite { t, prefix }) => {
                assert!(t > 0.0);
                assert!(!prefix.is_empty());
                assert!(prefix.states.iter().all(|s| s[0].is_finite() && s[1].is_finite()));
            }
            Ok(_) => panic!("expected NonFinite, got a finite path"),
            Err(e) => panic!("expected NonFinite, got {e}"),
        }
    }

    #[test]
    fn first_integral_conserved_by_rk4() {
        let k = nf_constants(&NondimParams::default()).unwrap();
        let cfg = SimConfig::new(100.0, 0, [0.0, 0.4]);
        let t = rk4_path(&Field::Reduced { k, mu: 0.0 }, &cfg).unwrap();
        let q0 = first_integral(0.0, 0.4, &k);
        let worst = t
            .states
            .iter()
            .map(|s| ((first_integral(s[0], s[1], &k) - q0) / q0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn stochastic_nf_without_noise_is_deterministic_nf() {
        let p = NondimParams::default().with_h(0.88);
        let c = stoch_nf_coeffs(&p).unwrap();
        let cfg = SimConfig::new(20.0, 0, [0.5, 0.2]).with_dt(1e-3);
        let s = stochastic_nf_path(&c, &cfg).unwrap();
        let mut u = cfg.initial;
        let f = Field::NormalForm(c.k);
        for i in 0..cfg.steps() {
            let d = f.eval(u);
            u = axpy(u, cfg.dt, d);
            let _ = i;
        }
        let last = s.last().unwrap();
        assert!((last[0] - u[0]).abs() < 1e-12 && (last[1] - u[1]).abs() < 1e-12);
        assert_eq!(s.coords, Coords::Lz);
        assert!(s.params.sigma1 == 0.0);
    }
}
