//! Parameters and vector fields of the predator-prey system.
//!
//! Dimensional model (prey `U`, predator `V`, time `s`):
//!
//! ```text
//! dU = U[r(1 − U/K) − pV/(H + U)] ds + ζ₁ U dB₁
//! dV = V[bpU/(H + U) − e − mV] ds + ζ₂ V dB₂
//! ```
//!
//! With `t = bp·s`, `X = U/K`, `Y = pV/(rK)` it becomes the nondimensional
//! slow-fast system driven by [`NondimParams`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on ε accepted by [`NondimParams::validate`].
pub const EPS_SANITY_BOUND: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionalParams {
    /// Prey intrinsic growth rate.
    pub r: f64,
    /// Prey carrying capacity.
    #[serde(rename = "K")]
    pub capacity: f64,
    /// Maximum per-capita predation rate.
    pub p: f64,
    /// Semi-saturation constant.
    #[serde(rename = "H")]
    pub half_saturation: f64,
    /// Birth-to-consumption ratio.
    pub b: f64,
    /// Predator per-capita mortality.
    pub e: f64,
    /// Intraspecific competition among predators.
    pub m: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

impl DimensionalParams {
    /// A dimensional set mapping exactly onto (β, d, h, ε) = (0.25, 0.25, 0.91, 0.05).
    pub fn canonical() -> Self {
        Self {
            r: 1.0,
            capacity: 1.0,
            p: 1.0,
            half_saturation: 0.25,
            b: 0.05,
            e: 0.0125,
            m: 0.0455,
            zeta1: 0.0,
            zeta2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r", self.r),
            ("K", self.capacity),
            ("p", self.p),
            ("H", self.half_saturation),
            ("b", self.b),
            ("e", self.e),
            ("m", self.m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("zeta1", self.zeta1), ("zeta2", self.zeta2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.b * self.p >= self.r {
            return Err(Error::InvalidParameter(format!(
                "bp = {} must be smaller than r = {} (eps < 1)",
                self.b * self.p,
                self.r
            )));
        }
        Ok(())
    }
}

/// Dimensionless parameters (β, d, h, ε, σ₁, σ₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondimParams {
    pub beta: f64,
    pub d: f64,
    pub h: f64,
    pub eps: f64,
    #[serde(default)]
    pub sigma1: f64,
    #[serde(default)]
    pub sigma2: f64,
}

impl Default for NondimParams {
    /// The excitable-regime operating point used throughout: β = d = 0.25,
    /// h = 0.91, ε = 0.05, no noise.
    fn default() -> Self {
        Self {
            beta: 0.25,
            d: 0.25,
            h: 0.91,
            eps: 0.05,
            sigma1: 0.0,
            sigma2: 0.0,
        }
    }
}

impl NondimParams {
    pub fn new(beta: f64, d: f64, h: f64, eps: f64) -> Self {
        Self {
            beta,
            d,
            h,
            eps,
            sigma1: 0.0,
            sigma2: 0.0,
        }
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_noise(mut self, sigma1: f64, sigma2: f64) -> Self {
        self.sigma1 = sigma1;
        self.sigma2 = sigma2;
        self
    }

    /// Checks the parameter assumptions, including ε < [`EPS_SANITY_BOUND`].
    pub fn validate(&self) -> Result<()> {
        self.validate_inner(EPS_SANITY_BOUND)?;
        Ok(())
    }

    /// Like [`validate`](Self::validate) but only requires ε < 1, logging a
    /// warning past the sanity bound.
    pub fn validate_relaxed(&self) -> Result<()> {
        self.validate_inner(1.0)?;
        if self.eps >= EPS_SANITY_BOUND {
            log::warn!(
                "eps = {} is not small; slow-fast results may not apply",
                self.eps
            );
        }
        Ok(())
    }

    fn validate_inner(&self, eps_bound: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.d > 0.0 && self.d < 1.0) {
            return bad(format!("d must lie in (0, 1), got {}", self.d));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.eps > 0.0 && self.eps < eps_bound) {
            return bad(format!("eps must lie in (0, {eps_bound}), got {}", self.eps));
        }
        if !(self.sigma1 >= 0.0 && self.sigma1.is_finite()) {
            return bad(format!("sigma1 must be nonnegative, got {}", self.sigma1));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be nonnegative, got {}", self.sigma2));
        }
        Ok(())
    }
}

/// Prey/predator densities (or any planar state).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for State {
    fn from(a: [f64; 2]) -> Self {
        Self { x: a[0], y: a[1] }
    }
}

/// Which form of the deterministic field to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldVariant {
    /// `ẋ = (x/ε)(1 − x − y/(β+x))`, `ẏ = y(x/(β+x) − d − hy)`.
    Full,
    /// The orbitally equivalent field after `dt ↦ (β + x) dt`, i.e. the full
    /// field multiplied by `β + x`.
    TimeRescaled,
}

pub fn nondimensionalize(dim: &DimensionalParams) -> Result<NondimParams> {
    dim.validate()?;
    let bp = dim.b * dim.p;
    Ok(NondimParams {
        beta: dim.half_saturation / dim.capacity,
        d: dim.e / bp,
        h: dim.m * dim.r * dim.capacity / (bp * dim.p),
        eps: bp / dim.r,
        sigma1: dim.zeta1 / dim.r.sqrt(),
        sigma2: dim.zeta2 / bp.sqrt(),
    })
}

/// Inverse of [`nondimensionalize`] given the three free scales `r`, `K`, `p`.
pub fn redimensionalize(nd: &NondimParams, r: f64, capacity: f64, p: f64) -> DimensionalParams {
    let bp = nd.eps * r;
    let b = bp / p;
    DimensionalParams {
        r,
        capacity,
        p,
        half_saturation: nd.beta * capacity,
        b,
        e: nd.d * bp,
        m: nd.h * bp * p / (r * capacity),
        zeta1: nd.sigma1 * r.sqrt(),
        zeta2: nd.sigma2 * bp.sqrt(),
    }
}

pub fn drift(s: State, p: &NondimParams, variant: FieldVariant) -> [f64; 2] {
    let State { x, y } = s;
    let bx = p.beta + x;
    match variant {
        FieldVariant::Full => [
            x * (1.0 - x - y / bx) / p.eps,
            y * (x / bx - p.d - p.h * y),
        ],
        FieldVariant::TimeRescaled => [
            x * ((1.0 - x) * bx - y) / p.eps,
            y * (x - (p.d + p.h * y) * bx),
        ],
    }
}

/// Diagonal multiplicative noise coefficients `(σ₁x/√ε, σ₂y)`.
pub fn diffusion(s: State, p: &NondimParams) -> [f64; 2] {
    [p.sigma1 * s.x / p.eps.sqrt(), p.sigma2 * s.y]
}

/// Contents of a parameter file: either key set is accepted.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ParamFile {
    Nondim(NondimParams),
    Dimensional(DimensionalParams),
}

impl ParamFile {
    pub fn into_nondim(self) -> Result<NondimParams> {
        let nd = match self {
            ParamFile::Nondim(nd) => nd,
            ParamFile::Dimensional(dim) => nondimensionalize(&dim)?,
        };
        nd.validate()?;
        Ok(nd)
    }
}

/// Parses a flat JSON object with keys `beta, d, h, eps, sigma1, sigma2` or
/// `r, K, p, H, b, e, m, zeta1, zeta2`.
pub fn parse_params(json: &str) -> Result<NondimParams> {
    let file: ParamFile = serde_json::from_str(json).map_err(|e| {
        Error::Parse(format!(
            "expected nondimensional (beta,d,h,eps,sigma1,sigma2) or dimensional (r,K,p,H,b,e,m,zeta1,zeta2) keys: {e}"
        ))
    })?;
    file.into_nondim()
}

pub fn load_params(path: impl AsRef<Path>) -> Result<NondimParams> {
    parse_params(&std::fs::read_to_string(path)?)
}
