//! Stochastic slow-fast predator-prey toolkit.
//!
//! The model is the nondimensional Bazykin-type system
//!
//! ```text
//! dX = (X/ε)(1 − X − Y/(β + X)) dt + (σ₁/√ε) X dB₁
//! dY = Y(X/(β + X) − d − hY) dt + σ₂ Y dB₂
//! ```
//!
//! Near the singular Hopf point the deterministic system is excitable and
//! noise produces mixed-mode oscillations: runs of small oscillations (SAOs)
//! broken by large outbreaks (LAOs). The crate covers the whole pipeline:
//!
//! * [`model`]: parameters, scaling and the drift/diffusion fields.
//! * [`equilibrium`]: coexistence equilibrium, Hopf thresholds, δ/γ/μ.
//! * [`integrator`]: RK4 and Milstein steppers producing [`Trajectory`]s.
//! * [`events`]: SAO/LAO classification and the inter-spike count N.
//! * [`stats`]: summaries of N, the geometric tail parameter λ₀, pgf diagnostics.
//! * [`normal_form`]: the coordinate change to the normal form, its
//!   stochastic version and the repeated-outbreak probability Φ(−κ).
//! * [`sweep`]: parameter grids over (μ or h, σ).

pub mod batch;
pub mod equilibrium;
pub mod error;
pub mod events;
pub mod integrator;
pub mod io;
pub mod model;
pub mod normal_form;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
pub use integrator::{SimConfig, Trajectory};
pub use model::{DimensionalParams, NondimParams, State};
