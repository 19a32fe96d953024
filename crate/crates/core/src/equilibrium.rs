//! Coexistence equilibrium, singular Hopf point and the distance-to-Hopf
//! constants δ, γ, μ.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{rk4_step, VectorField};
use crate::model::{drift, FieldVariant, NondimParams, State};

const BRACKET_LO: f64 = 1e-9;
const BRACKET_HI: f64 = 1.0 - 1e-9;
const SCAN_POINTS: usize = 1000;
const BISECTION_ITERS: usize = 200;

/// The stationary point `P = (α, (1 − α)(β + α))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub alpha: f64,
    pub x: f64,
    pub y: f64,
}

impl Equilibrium {
    pub fn from_alpha(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            x: alpha,
            y: (1.0 - alpha) * (beta + alpha),
        }
    }

    pub fn state(&self) -> State {
        State::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianSummary {
    /// Row-major entries `[[j11, j12], [j21, j22]]`.
    pub entries: [[f64; 2]; 2],
    /// Trace from the entries.
    pub trace: f64,
    /// Determinant from the entries.
    pub det: f64,
    /// Trace from the factored closed form (carries the factor `α* − α`).
    pub trace_closed: f64,
    /// Determinant from the closed form.
    pub det_closed: f64,
    #[serde(skip)]
    pub eigenvalues: [Complex64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfData {
    pub alpha_star: f64,
    pub h_star: f64,
    pub h_tilde: f64,
    pub delta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub hopf_admissible: bool,
    pub singular_hopf_admissible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Stable focus just past the Hopf point: `h* ≤ h < h̃` when `d < (1 − β)/(1 + β)`.
    Excitable,
    /// `h < h*`: the equilibrium has lost stability.
    HopfUnstable,
    /// `h ≥ h̃` when `d < (1 − β)/(1 + β)`.
    FarStable,
    /// `d ≥ (1 − β)/(1 + β)`.
    ConditionsViolated,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Excitable => "excitable",
            Regime::HopfUnstable => "hopf-unstable",
            Regime::FarStable => "far-stable",
            Regime::ConditionsViolated => "conditions-violated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfOffsets {
    /// δ = α* − d(β+α*) − h(1−α*)(β+α*)².
    pub delta: f64,
    /// δ rewritten through the equilibrium relation, `−(β+α*)(α−α*)[…]`.
    pub delta_factored: f64,
    pub gamma: f64,
    pub mu: f64,
}

/// Residual of the equilibrium relation `α/(β+α) − d − h(1−α)(β+α)`.
pub fn equilibrium_residual(alpha: f64, p: &NondimParams) -> f64 {
    alpha / (p.beta + alpha) - p.d - p.h * (1.0 - alpha) * (p.beta + alpha)
}

fn equilibrium_residual_slope(alpha: f64, p: &NondimParams) -> f64 {
    let ba = p.beta + alpha;
    p.beta / (ba * ba) - p.h * (1.0 - p.beta - 2.0 * alpha)
}

/// Solves for the unique root of the equilibrium relation on (0, 1).
///
/// Scans [`SCAN_POINTS`] points for sign changes; more than one bracket is an
/// error. The bracket is refined by bisection followed by one Newton step
/// that is kept only if it improves the residual.
pub fn solve_equilibrium(p: &NondimParams) -> Result<Equilibrium> {
    let f = |a: f64| equilibrium_residual(a, p);
    let step = (BRACKET_HI - BRACKET_LO) / (SCAN_POINTS - 1) as f64;
    let mut brackets = Vec::new();
    let mut prev_a = BRACKET_LO;
    let mut prev_f = f(prev_a);
    for i in 1..SCAN_POINTS {
        let a = BRACKET_LO + step * i as f64;
        let fa = f(a);
        if fa == 0.0 {
            brackets.push((a, a));
        } else if prev_f != 0.0 && prev_f.signum() != fa.signum() {
            brackets.push((prev_a, a));
        }
        prev_a = a;
        prev_f = fa;
    }
    let (mut lo, mut hi) = match brackets.len() {
        0 => return Err(Error::NoRoot),
        1 => brackets[0],
        n => return Err(Error::MultipleRoots(n)),
    };
    let mut f_lo = f(lo);
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    let newton = alpha - f(alpha) / equilibrium_residual_slope(alpha, p);
    if newton.is_finite() && f(newton).abs() < f(alpha).abs() {
        alpha = newton;
    }
    Ok(Equilibrium::from_alpha(alpha, p.beta))
}

/// Prey coordinate of the equilibrium at the Hopf point (trace zero).
pub fn alpha_star(p: &NondimParams) -> f64 {
    let b = (1.0 - p.beta) - p.eps * (1.0 - p.d);
    (b + (b * b + 8.0 * p.d * p.beta * p.eps).sqrt()) / 4.0
}

pub fn jacobian_summary(p: &NondimParams, eq: &Equilibrium) -> JacobianSummary {
    let NondimParams { beta, h, eps, .. } = *p;
    let a = eq.alpha;
    let ba = beta + a;
    let j11 = a / eps * (1.0 - beta - 2.0 * a) / ba;
    let j12 = -a / (eps * ba);
    let j21 = beta * (1.0 - a) / ba;
    let j22 = -h * (1.0 - a) * ba;
    let trace = j11 + j22;
    let det = j11 * j22 - j12 * j21;

    let ast = alpha_star(p);
    let trace_closed = (ast - a) / (eps * ba * (beta + ast))
        * (2.0 * a * ast + 2.0 * (a + ast) * beta - beta + eps * beta + beta * beta);
    let det_closed = a * (1.0 - a) / eps * (beta / (ba * ba) - h * (1.0 - beta - 2.0 * a));

    let half_tr = Complex64::new(0.5 * trace, 0.0);
    let disc = Complex64::new(0.25 * trace * trace - det, 0.0).sqrt();
    JacobianSummary {
        entries: [[j11, j12], [j21, j22]],
        trace,
        det,
        trace_closed,
        det_closed,
        eigenvalues: [half_tr + disc, half_tr - disc],
    }
}

/// `(h*, h̃)`: the Hopf threshold at finite ε and its singular limit.
pub fn hopf_thresholds(p: &NondimParams) -> (f64, f64) {
    let NondimParams { beta, d, eps, .. } = *p;
    let a = alpha_star(p);
    let h_star = a * (1.0 - beta - 2.0 * a) / (eps * (1.0 - a) * (beta + a).powi(2));
    let h_tilde = 4.0 * (1.0 - beta - d * (1.0 + beta)) / (1.0 + beta).powi(3);
    (h_star, h_tilde)
}

/// `|h*(ε) − h̃|` along a sequence of ε values, for checking the singular limit.
pub fn hopf_threshold_gaps(p: &NondimParams, eps_values: &[f64]) -> Vec<(f64, f64)> {
    eps_values
        .iter()
        .map(|&eps| {
            let (hs, ht) = hopf_thresholds(&p.with_eps(eps));
            (eps, (hs - ht).abs())
        })
        .collect()
}

/// `(1−d)²/β < 1/ε` and `dβ < (1−d)(1−β)`.
pub fn hopf_admissible(p: &NondimParams) -> bool {
    (1.0 - p.d).powi(2) / p.beta < 1.0 / p.eps && p.d * p.beta < (1.0 - p.d) * (1.0 - p.beta)
}

/// `d < (1−β)/(1+β)`.
pub fn singular_hopf_admissible(p: &NondimParams) -> bool {
    p.d < (1.0 - p.beta) / (1.0 + p.beta)
}

pub fn classify_regime(p: &NondimParams) -> Regime {
    if !singular_hopf_admissible(p) {
        return Regime::ConditionsViolated;
    }
    let (h_star, h_tilde) = hopf_thresholds(p);
    if p.h < h_star {
        Regime::HopfUnstable
    } else if p.h < h_tilde {
        Regime::Excitable
    } else {
        Regime::FarStable
    }
}

/// δ from its defining polynomial (no equilibrium solve needed).
pub fn delta(p: &NondimParams) -> f64 {
    let a = alpha_star(p);
    let ba = p.beta + a;
    a - p.d * ba - p.h * (1.0 - a) * ba * ba
}

pub fn gamma(p: &NondimParams) -> f64 {
    let a = alpha_star(p);
    let ys = (1.0 - a) * (p.beta + a);
    ys * (1.0 - p.d - p.h * ys)
}

/// μ = (1 − β − 3α*)·δ / ((1 − d − h(1−α*)(β+α*))·√ε).
///
/// This is the constant term of ż in the normal form once the ε-corrections
/// are dropped; the normal-form push-forward tests check it against the
/// transformed vector field.
pub fn mu(p: &NondimParams) -> f64 {
    let a = alpha_star(p);
    let ys = (1.0 - a) * (p.beta + a);
    (1.0 - p.beta - 3.0 * a) * delta(p) / ((1.0 - p.d - p.h * ys) * p.eps.sqrt())
}

/// The `h` at which μ takes the requested value, other parameters fixed.
///
/// μ is a ratio of two affine functions of `h`, so the inverse is explicit.
pub fn h_for_mu(p: &NondimParams, target_mu: f64) -> Result<f64> {
    let a = alpha_star(p);
    let ba = p.beta + a;
    let ys = (1.0 - a) * ba;
    let c1 = 1.0 - p.beta - 3.0 * a;
    let s = target_mu * p.eps.sqrt();
    // c1·(A − hB) = s·(E − hF)
    let (aa, bb) = (a - p.d * ba, ys * ba);
    let (ee, ff) = (1.0 - p.d, ys);
    let denom = c1 * bb - s * ff;
    if denom.abs() < 1e-14 {
        return Err(Error::InvalidParameter(format!(
            "mu = {target_mu} is not attainable by varying h"
        )));
    }
    let h = (c1 * aa - s * ee) / denom;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "mu = {target_mu} requires h = {h}"
        )));
    }
    Ok(h)
}

pub fn hopf_offsets(p: &NondimParams) -> Result<HopfOffsets> {
    let eq = solve_equilibrium(p)?;
    let a = alpha_star(p);
    let al = eq.alpha;
    let delta_factored = -(p.beta + a)
        * (al - a)
        * (p.beta / ((p.beta + al) * (p.beta + a)) - p.h * (1.0 - p.beta - (al + a)));
    Ok(HopfOffsets {
        delta: delta(p),
        delta_factored,
        gamma: gamma(p),
        mu: mu(p),
    })
}

pub fn hopf_data(p: &NondimParams) -> HopfData {
    let (h_star, h_tilde) = hopf_thresholds(p);
    HopfData {
        alpha_star: alpha_star(p),
        h_star,
        h_tilde,
        delta: delta(p),
        gamma: gamma(p),
        mu: mu(p),
        hopf_admissible: hopf_admissible(p),
        singular_hopf_admissible: singular_hopf_admissible(p),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SeparatrixConfig {
    /// Prey coordinate of the seed on the repelling branch `y = (1−x)(β+x)`.
    pub seed_x: f64,
    /// Upward displacement of the seed.
    pub offset: f64,
    pub dt: f64,
    /// Maximum backward integration time.
    pub duration: f64,
    /// Truncation box `[x_min, x_max, y_min, y_max]`; the polyline stops when
    /// the orbit leaves it.
    pub bbox: [f64; 4],
}

impl Default for SeparatrixConfig {
    fn default() -> Self {
        Self {
            seed_x: 0.3,
            offset: 1e-6,
            dt: 1e-4,
            duration: 10.0,
            bbox: [0.0, 1.0, 0.0, 1.0],
        }
    }
}

/// Orbits leaving this box are treated as divergent.
const SEPARATRIX_LIMIT: [f64; 4] = [-0.1, 1.5, -0.1, 1.5];

struct BackwardField<'a>(&'a NondimParams);

impl VectorField for BackwardField<'_> {
    fn eval(&self, u: [f64; 2]) -> [f64; 2] {
        let f = drift(State::from(u), self.0, FieldVariant::Full);
        [-f[0], -f[1]]
    }
}

/// A piece of the separatrix, traced by integrating the deterministic field
/// backwards from a point just above the repelling branch of the critical
/// manifold. Returned in forward-time order with strictly increasing
/// (nonpositive) time stamps, ending at the seed.
pub fn separatrix(p: &NondimParams, cfg: &SeparatrixConfig) -> Result<Vec<(f64, State)>> {
    if !matches!(classify_regime(p), Regime::Excitable | Regime::FarStable) {
        return Err(Error::InvalidParameter(
            "the separatrix is only traced when the equilibrium is a stable focus".into(),
        ));
    }
    let xs = cfg.seed_x;
    let mut u = [xs, (1.0 - xs) * (p.beta + xs) + cfg.offset];
    let field = BackwardField(p);
    let inside = |u: [f64; 2], b: &[f64; 4]| u[0] >= b[0] && u[0] <= b[1] && u[1] >= b[2] && u[1] <= b[3];
    let mut out = vec![(0.0, State::from(u))];
    let n = (cfg.duration / cfg.dt).ceil() as usize;
    for i in 1..=n {
        let t = -(i as f64) * cfg.dt;
        u = rk4_step(&field, u, cfg.dt);
        if !(u[0].is_finite() && u[1].is_finite()) || !inside(u, &SEPARATRIX_LIMIT) {
            return Err(Error::IntegrationDiverged { t });
        }
        if !inside(u, &cfg.bbox) {
            break;
        }
        out.push((t, State::from(u)));
    }
    out.reverse();
    Ok(out)
}
