//! Normal form near the singular Hopf point.
//!
//! The coordinate change from `(x, y)` to `(l, z)` is a chain of five steps:
//!
//! 1. time rescaling `dt ↦ (β + x) dt`;
//! 2. shift `x = u + α*`, `y = v + (1 − α*)(β + α*)`;
//! 3. blow-up `u = √ε p`, `v = −ε q`, `t = √ε t'`;
//! 4. `α* q = ξ − c₁ p² + α*γ/(2c₁)`, which straightens the `ṗ = 0` nullcline;
//! 5. `l = c₁ p/(α*γ)`, `z = −c₁ ξ/(α*γ)`,
//!
//! with `c₁ = 1 − β − 3α*`. In the new coordinates the deterministic system
//! reads `l̇ = ½ − z + A₀√ε`, `ż = μ + 2α*γ l z + A₁√ε + A₂ε + A₃ε^{3/2} + A₄ε²`.
//!
//! Applying the same chain to the stochastic system with Itô's formula gives
//! scaled noise intensities σ̂ᵢ, the shifted drift constant μ̂ and the
//! corrected polynomials Bᵢ. Near the separatrix `Z = 0` the Z-dynamics
//! reduce to a linear SDE whose Gaussian terminal law yields the
//! repeated-outbreak probability Φ(−κ).

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::equilibrium::{self, alpha_star};
use crate::error::{Error, Result};
use crate::model::{drift, FieldVariant, NondimParams, State};
use crate::quadrature::adaptive_simpson;
use crate::rng::GaussianStream;

const QUAD_TOL: f64 = 1e-12;

/// Constants of the normal-form transformation for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NFConstants {
    pub alpha_star: f64,
    pub beta: f64,
    pub d: f64,
    pub h: f64,
    pub eps: f64,
    pub delta: f64,
    /// δ recomputed through the equilibrium relation, when the equilibrium
    /// could be solved.
    pub delta_factored: Option<f64>,
    pub gamma: f64,
    pub mu: f64,
    /// `1 − β − 3α*`, the scaling denominator.
    pub c1: f64,
    /// `1 − β − 2α*`.
    pub c2: f64,
    /// Predator coordinate of the Hopf point, `(1 − α*)(β + α*)`.
    pub y_star: f64,
}

pub fn nf_constants(p: &NondimParams) -> Result<NFConstants> {
    let a = alpha_star(p);
    let c1 = 1.0 - p.beta - 3.0 * a;
    if c1.abs() < 1e-8 {
        return Err(Error::DegenerateScaling(c1));
    }
    let delta_factored = equilibrium::hopf_offsets(p).ok().map(|o| o.delta_factored);
    Ok(NFConstants {
        alpha_star: a,
        beta: p.beta,
        d: p.d,
        h: p.h,
        eps: p.eps,
        delta: equilibrium::delta(p),
        delta_factored,
        gamma: equilibrium::gamma(p),
        mu: equilibrium::mu(p),
        c1,
        c2: 1.0 - p.beta - 2.0 * a,
        y_star: (1.0 - a) * (p.beta + a),
    })
}

impl NFConstants {
    pub fn params(&self) -> NondimParams {
        NondimParams::new(self.beta, self.d, self.h, self.eps)
    }

    /// `α*γ`, the coefficient that sets the normal-form time scale.
    pub fn ag(&self) -> f64 {
        self.alpha_star * self.gamma
    }

    fn scale(&self) -> f64 {
        self.c1 / self.ag()
    }

    /// `α* − d(β + α*) + γ/(2c₁)`.
    fn lin(&self) -> f64 {
        self.alpha_star - self.d * (self.beta + self.alpha_star) + self.gamma / (2.0 * self.c1)
    }

    /// `z − ½ + α*γ l²`, i.e. `−c₁ q/γ`.
    fn w(&self, l: f64, z: f64) -> f64 {
        z - 0.5 + self.ag() * l * l
    }

    pub fn a0(&self, l: f64, z: f64) -> f64 {
        let (a, g, c1) = (self.alpha_star, self.gamma, self.c1);
        (self.lin() - g * z / c1) * l - a * g * g * self.c2 / (c1 * c1) * l.powi(3)
    }

    pub fn a1(&self, l: f64, z: f64) -> f64 {
        let (a, g, c1) = (self.alpha_star, self.gamma, self.c1);
        let hq = self.h * self.y_star * (self.beta + a);
        (self.delta - hq) * self.w(l, z) - 2.0 * a * g * l * l * (self.lin() - g * z / c1)
            + 2.0 * a * a * g.powi(3) * self.c2 * l.powi(4) / (c1 * c1)
    }

    pub fn a2(&self, l: f64, z: f64) -> f64 {
        let e1 = 1.0 - self.d - 2.0 * self.h * self.y_star;
        self.ag() * l / self.c1 * e1 * self.w(l, z)
    }

    pub fn a3(&self, l: f64, z: f64) -> f64 {
        -self.h * (self.beta + self.alpha_star) * self.gamma / self.c1 * self.w(l, z).powi(2)
    }

    pub fn a4(&self, l: f64, z: f64) -> f64 {
        -self.h * self.alpha_star * self.gamma.powi(2) * l / (self.c1 * self.c1)
            * self.w(l, z).powi(2)
    }
}

/// Maps `(x, y)` to normal-form coordinates `(l, z)`.
pub fn transform_to_nf(s: State, k: &NFConstants) -> [f64; 2] {
    let se = k.eps.sqrt();
    let p = (s.x - k.alpha_star) / se;
    let q = -(s.y - k.y_star) / k.eps;
    let xi = k.alpha_star * q + k.c1 * p * p - k.ag() / (2.0 * k.c1);
    let sc = k.scale();
    [sc * p, -sc * xi]
}

/// Inverse of [`transform_to_nf`].
pub fn transform_from_nf(lz: [f64; 2], k: &NFConstants) -> State {
    let sc = k.scale();
    let p = lz[0] / sc;
    let xi = -lz[1] / sc;
    let q = (xi - k.c1 * p * p + k.ag() / (2.0 * k.c1)) / k.alpha_star;
    State::new(k.alpha_star + k.eps.sqrt() * p, k.y_star - k.eps * q)
}

/// Analytic Jacobian `∂(l, z)/∂(x, y)`.
pub fn transform_jacobian(s: State, k: &NFConstants) -> [[f64; 2]; 2] {
    let se = k.eps.sqrt();
    let sc = k.scale();
    let p = (s.x - k.alpha_star) / se;
    [
        [sc / se, 0.0],
        [-sc * 2.0 * k.c1 * p / se, sc * k.alpha_star / k.eps],
    ]
}

/// The time-rescaled field pushed through the transformation, on the `t'`
/// clock: `√ε · J(x, y) · F_rescaled(x, y)`.
pub fn pushforward_field(s: State, k: &NFConstants) -> [f64; 2] {
    let f = drift(s, &k.params(), FieldVariant::TimeRescaled);
    let j = transform_jacobian(s, k);
    let se = k.eps.sqrt();
    [
        se * (j[0][0] * f[0] + j[0][1] * f[1]),
        se * (j[1][0] * f[0] + j[1][1] * f[1]),
    ]
}

pub fn nf_field(l: f64, z: f64, k: &NFConstants) -> [f64; 2] {
    let se = k.eps.sqrt();
    let e = k.eps;
    [
        0.5 - z + k.a0(l, z) * se,
        k.mu + 2.0 * k.ag() * l * z
            + k.a1(l, z) * se
            + k.a2(l, z) * e
            + k.a3(l, z) * e * se
            + k.a4(l, z) * e * e,
    ]
}

/// The normal form with all ε-terms dropped.
pub fn reduced_field(l: f64, z: f64, mu: f64, k: &NFConstants) -> [f64; 2] {
    [0.5 - z, mu + 2.0 * k.ag() * l * z]
}

/// `Q = z·exp(−2α*γ l² − 2z + 1)`, conserved by the reduced field at μ = 0.
pub fn first_integral(l: f64, z: f64, k: &NFConstants) -> f64 {
    z * (-2.0 * k.ag() * l * l - 2.0 * z + 1.0).exp()
}

/// Stationary point of the reduced field, `(−μ/(α*γ), ½)`.
pub fn reduced_fixed_point(mu: f64, k: &NFConstants) -> [f64; 2] {
    [-mu / k.ag(), 0.5]
}

/// Coefficients of the stochastic normal form
///
/// ```text
/// dL = [½ − Z + B₀√ε] dt' + σ̂₁ C(L) G₁(L) dB₁
/// dZ = [μ̂ + 2α*γLZ + B₁√ε + B₂ε + B₃ε^{3/2} + B₄ε²] dt'
///      + C(L)[σ̂₁ G₂(L) dB₁ + σ̂₂ G₃(L, Z) dB₂]
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochNFCoeffs {
    pub k: NFConstants,
    pub sigma_hat1: f64,
    pub sigma_hat2: f64,
    pub mu_hat: f64,
}

pub fn stoch_nf_coeffs(p: &NondimParams) -> Result<StochNFCoeffs> {
    let k = nf_constants(p)?;
    let f = k.c1 / (k.gamma * k.eps.powf(0.75));
    Ok(StochNFCoeffs::with_scaled_noise(k, f * p.sigma1, f * p.sigma2))
}

impl StochNFCoeffs {
    /// Builds the coefficients from already-scaled noise intensities; μ̂ is
    /// derived from μ and σ̂₁.
    pub fn with_scaled_noise(k: NFConstants, sigma_hat1: f64, sigma_hat2: f64) -> Self {
        let mu_hat = k.mu - k.ag() * (k.beta + k.alpha_star) * sigma_hat1 * sigma_hat1;
        Self {
            k,
            sigma_hat1,
            sigma_hat2,
            mu_hat,
        }
    }

    /// Overrides μ̂ directly (e.g. to pin a known operating point).
    pub fn with_mu_hat(mut self, mu_hat: f64) -> Self {
        self.mu_hat = mu_hat;
        self
    }

    /// `C(L) = √(β + α* + √ε α*γ L / c₁)`, i.e. `√(β + x)`.
    pub fn c(&self, l: f64) -> f64 {
        let k = &self.k;
        (k.beta + k.alpha_star + k.eps.sqrt() * k.ag() * l / k.c1).max(0.0).sqrt()
    }

    pub fn b0(&self, l: f64, z: f64) -> f64 {
        self.k.a0(l, z)
    }

    pub fn b1(&self, l: f64, z: f64) -> f64 {
        let k = &self.k;
        let s2 = self.sigma_hat1 * self.sigma_hat1;
        k.a1(l, z) - k.ag() * k.gamma * s2 * (2.0 * k.beta + 3.0 * k.alpha_star) * l / k.c1
    }

    pub fn b2(&self, l: f64, z: f64) -> f64 {
        let k = &self.k;
        let s2 = self.sigma_hat1 * self.sigma_hat1;
        k.a2(l, z)
            - k.alpha_star * k.gamma.powi(3) * s2 * (k.beta + 3.0 * k.alpha_star) * l * l
                / (k.c1 * k.c1)
    }

    pub fn b3(&self, l: f64, z: f64) -> f64 {
        let k = &self.k;
        let s2 = self.sigma_hat1 * self.sigma_hat1;
        k.a3(l, z) - k.alpha_star.powi(2) * k.gamma.powi(4) * s2 * l.powi(3) / k.c1.powi(3)
    }

    pub fn b4(&self, l: f64, z: f64) -> f64 {
        self.k.a4(l, z)
    }

    pub fn g1(&self, l: f64) -> f64 {
        1.0 + self.k.eps.sqrt() * self.k.gamma * l / self.k.c1
    }

    pub fn g2(&self, l: f64) -> f64 {
        -2.0 * self.k.ag() * l * self.g1(l)
    }

    pub fn g3(&self, l: f64, z: f64) -> f64 {
        let k = &self.k;
        k.y_star + k.eps * k.gamma * k.w(l, z) / k.c1
    }

    pub fn drift(&self, l: f64, z: f64) -> [f64; 2] {
        let se = self.k.eps.sqrt();
        let e = self.k.eps;
        [
            0.5 - z + self.b0(l, z) * se,
            self.mu_hat
                + 2.0 * self.k.ag() * l * z
                + self.b1(l, z) * se
                + self.b2(l, z) * e
                + self.b3(l, z) * e * se
                + self.b4(l, z) * e * e,
        ]
    }

    /// Noise matrix; row = (L, Z), column = (B₁, B₂).
    pub fn noise(&self, l: f64, z: f64) -> [[f64; 2]; 2] {
        let c = self.c(l);
        [
            [self.sigma_hat1 * c * self.g1(l), 0.0],
            [self.sigma_hat1 * c * self.g2(l), self.sigma_hat2 * c * self.g3(l, z)],
        ]
    }

    /// Derivatives used by the Milstein corrections:
    /// `(∂_L b_L1, ∂_L b_Z1, ∂_Z b_Z2)`.
    pub fn noise_slopes(&self, l: f64) -> [f64; 3] {
        let k = &self.k;
        let se = k.eps.sqrt();
        let c = self.c(l);
        let kc = se * k.ag() / k.c1;
        let dc = if c > 0.0 { kc / (2.0 * c) } else { 0.0 };
        let m = se * k.gamma / k.c1;
        let g1 = self.g1(l);
        let g2 = self.g2(l);
        let dg2 = -2.0 * k.ag() * (g1 + l * m);
        [
            self.sigma_hat1 * (dc * g1 + c * m),
            self.sigma_hat1 * (dc * g2 + c * dg2),
            self.sigma_hat2 * c * k.eps * k.gamma / k.c1,
        ]
    }

    /// The noisy linear equation governing Z near the separatrix, on the
    /// centred clock `s = t' − 2P`.
    pub fn linear_z(&self) -> LinearZ {
        let k = &self.k;
        LinearZ {
            mu_hat: self.mu_hat,
            ag: k.ag(),
            beta_alpha: k.beta + k.alpha_star,
            y_star: k.y_star,
            sigma_hat1: self.sigma_hat1,
            sigma_hat2: self.sigma_hat2,
        }
    }
}

/// `dZ = (μ̂ + α*γ s Z) ds + √(β+α*)·(−α*γ s σ̂₁ dB₁ + (1−α*)(β+α*) σ̂₂ dB₂)`.
///
/// The `s` in the B₁ coefficient comes from `G₂(L) ≈ −2α*γL` with `L ≈ s/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearZ {
    pub mu_hat: f64,
    pub ag: f64,
    pub beta_alpha: f64,
    pub y_star: f64,
    pub sigma_hat1: f64,
    pub sigma_hat2: f64,
}

impl LinearZ {
    pub fn drift(&self, s: f64, z: f64) -> f64 {
        self.mu_hat + self.ag * s * z
    }

    pub fn noise(&self, s: f64) -> [f64; 2] {
        let r = self.beta_alpha.sqrt();
        [
            -r * self.ag * s * self.sigma_hat1,
            r * self.y_star * self.sigma_hat2,
        ]
    }

    /// Noise-free solution from `(s0, z0)` to `s1`, by variation of constants.
    pub fn deterministic_solution(&self, s0: f64, z0: f64, s1: f64) -> f64 {
        let g = self.ag;
        let integral = adaptive_simpson(|s| (-0.5 * g * s * s).exp(), s0, s1, QUAD_TOL);
        (0.5 * g * s1 * s1).exp() * (z0 * (-0.5 * g * s0 * s0).exp() + self.mu_hat * integral)
    }
}

/// Euler–Maruyama path of [`LinearZ`] over `grid` (strictly increasing).
pub fn linearized_z_path(coeffs: &StochNFCoeffs, z0: f64, grid: &[f64], seed: u64) -> Vec<f64> {
    let lin = coeffs.linear_z();
    let mut g = GaussianStream::new(seed);
    let mut out = Vec::with_capacity(grid.len());
    let mut z = z0;
    if let Some(&first) = grid.first() {
        out.push(z);
        let mut s = first;
        for &next in &grid[1..] {
            let ds = next - s;
            let db = g.increment_pair(ds.sqrt());
            let b = lin.noise(s);
            z += lin.drift(s, z) * ds + b[0] * db[0] + b[1] * db[1];
            out.push(z);
            s = next;
        }
    }
    out
}

/// Uniform grid on `[−2P, 2P]` with `n` steps.
pub fn centred_grid(p_scale: f64, n: usize) -> Vec<f64> {
    let h = 4.0 * p_scale / n as f64;
    (0..=n).map(|i| -2.0 * p_scale + h * i as f64).collect()
}

/// Horizontal scale `P` defined by `2γα* P² = log|(c₀μ̂)^{−a}|`.
pub fn p_scale(coeffs: &StochNFCoeffs, a: f64, c0: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("a must lie in (0, 1), got {a}")));
    }
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
    }
    let ag = coeffs.k.ag();
    if !(ag > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha* gamma must be positive, got {ag}")));
    }
    let m = coeffs.mu_hat;
    let rhs = -a * (c0 * m).abs().ln();
    if m == 0.0 || !(rhs > 0.0) || !rhs.is_finite() {
        return Err(Error::UndefinedScale(m));
    }
    Ok((rhs / (2.0 * ag)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZtMoments {
    pub p_scale: f64,
    /// `T = 4P`.
    pub horizon: f64,
    pub mean_exact: f64,
    pub var_exact: f64,
    pub mean_asymptotic: f64,
    pub var_bound: f64,
}

/// Mean and variance of `Z_T` for the linear equation started at `s = −2P`.
pub fn zt_moments(coeffs: &StochNFCoeffs, a: f64, c0: f64, z0: f64) -> Result<ZtMoments> {
    let p = p_scale(coeffs, a, c0)?;
    Ok(zt_moments_at_scale(coeffs, p, z0))
}

/// As [`zt_moments`] with `P` supplied directly.
pub fn zt_moments_at_scale(coeffs: &StochNFCoeffs, p: f64, z0: f64) -> ZtMoments {
    let lin = coeffs.linear_z();
    let g = lin.ag;
    let growth = (2.0 * g * p * p).exp();
    let gauss_half = adaptive_simpson(|s| (-0.5 * g * s * s).exp(), -2.0 * p, 2.0 * p, QUAD_TOL);
    let gauss = adaptive_simpson(|s| (-g * s * s).exp(), -2.0 * p, 2.0 * p, QUAD_TOL);
    let second = adaptive_simpson(|s| s * s * (-g * s * s).exp(), -2.0 * p, 2.0 * p, QUAD_TOL);
    let s1 = lin.sigma_hat1 * lin.sigma_hat1;
    let s2 = lin.sigma_hat2 * lin.sigma_hat2;
    let ys2 = lin.y_star * lin.y_star;
    let mean_exact = z0 + lin.mu_hat * growth * gauss_half;
    let var_exact = lin.beta_alpha * growth * growth * (g * g * s1 * second + ys2 * s2 * gauss);
    let mean_asymptotic = z0 + lin.mu_hat * growth * (2.0 * PI / g).sqrt();
    let var_bound =
        lin.beta_alpha * growth * growth * (PI / g).sqrt() * (0.5 * g * s1 + ys2 * s2);
    ZtMoments {
        p_scale: p,
        horizon: 4.0 * p,
        mean_exact,
        var_exact,
        mean_asymptotic,
        var_bound,
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// κ = μ̂ π^{1/4} / ((γα*)^{1/4} √((γα*σ̂₁²/2 + (1−α*)²(β+α*)²σ̂₂²)(β+α*))).
pub fn kappa(
    mu_hat: f64,
    sigma_hat1: f64,
    sigma_hat2: f64,
    alpha_star: f64,
    gamma: f64,
    beta: f64,
) -> f64 {
    let ag = alpha_star * gamma;
    let ba = beta + alpha_star;
    let ys = (1.0 - alpha_star) * ba;
    let noise = 0.5 * ag * sigma_hat1 * sigma_hat1 + ys * ys * sigma_hat2 * sigma_hat2;
    mu_hat * PI.powf(0.25) / (ag.powf(0.25) * (noise * ba).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeProbability {
    pub kappa: f64,
    /// Φ(−κ), the approximate probability that an outbreak is followed
    /// immediately by another one (N = 0).
    pub prob: f64,
}

pub fn repeated_spike_probability(coeffs: &StochNFCoeffs) -> Result<SpikeProbability> {
    if coeffs.sigma_hat1 == 0.0 && coeffs.sigma_hat2 == 0.0 {
        let limit = if coeffs.mu_hat > 0.0 {
            Some(0.0)
        } else if coeffs.mu_hat < 0.0 {
            Some(1.0)
        } else {
            None
        };
        return Err(Error::ZeroNoise { limit });
    }
    let k = &coeffs.k;
    if !(k.ag() > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha* gamma must be positive, got {}",
            k.ag()
        )));
    }
    let kap = kappa(
        coeffs.mu_hat,
        coeffs.sigma_hat1,
        coeffs.sigma_hat2,
        k.alpha_star,
        k.gamma,
        k.beta,
    );
    Ok(SpikeProbability {
        kappa: kap,
        prob: normal_cdf(-kap),
    })
}

/// Φ(−κ) with the zero-noise case folded into its deterministic limit.
pub fn repeated_spike_probability_or_limit(coeffs: &StochNFCoeffs) -> Option<f64> {
    match repeated_spike_probability(coeffs) {
        Ok(sp) => Some(sp.prob),
        Err(Error::ZeroNoise { limit }) => limit,
        Err(_) => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikeEstimate {
    pub a: f64,
    pub c0: f64,
    pub moments: ZtMoments,
    pub kappa: f64,
    pub prob: f64,
    /// `Φ(−E[Z_T]/√Var(Z_T))` from the finite-horizon moments; unlike
    /// `prob` it depends on `a` and `c₀`.
    pub prob_exact: f64,
}

pub fn spike_estimate(coeffs: &StochNFCoeffs, a: f64, c0: f64, z0: f64) -> Result<SpikeEstimate> {
    let moments = zt_moments(coeffs, a, c0, z0)?;
    let sp = repeated_spike_probability(coeffs)?;
    Ok(SpikeEstimate {
        a,
        c0,
        moments,
        kappa: sp.kappa,
        prob: sp.prob,
        prob_exact: normal_cdf(-moments.mean_exact / moments.var_exact.sqrt()),
    })
}
