//! Simulation and exact computation for self-avoiding boundary bubbles in
//! the upper half-plane and the scale-invariant measure on self-avoiding
//! loops they generate.
//!
//! The crate has three layers:
//!
//! - **Exact evaluators** ([`specfun`]): the closed-form conformal-radius
//!   law (triple product / alternating series / Dedekind-eta / modular
//!   forms), the absorption-time survival function, Jacobi `P_n^{(1,−1)}`
//!   polynomials and the eigenfunction expansion of the angle process's
//!   transition density, plus asymptotics and two-sided bounds.
//! - **Stochastic layer** ([`diffusion`], [`loewner`]): the radial angle
//!   diffusion seen from a marked interior point (conditioned and
//!   unconditioned), lifetime sampling, recovery of the half-plane driving
//!   function from an angle path, and a chordal Loewner solver (vertical-slit
//!   discretization) for traces and tracked interior points.
//! - **Geometry and measures** ([`geometry`], [`measures`]): ring domains,
//!   Möbius modulus, winding numbers, sandwich checks between conformal
//!   radius and ring modulus, restriction-style corrections, and
//!   Monte-Carlo estimators for the loop measure's mass functionals.
//!
//! Everything stochastic is seeded explicitly and parallel runs are
//! reproducible independently of thread count (per-path deterministic RNG
//! streams).

pub mod diffusion;
pub mod error;
pub mod geometry;
pub mod loewner;
pub mod measures;
pub mod quad;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};

/// The fixed SLE parameter of the whole crate: κ = 8/3.
pub const KAPPA: f64 = 8.0 / 3.0;

/// Half-plane capacity growth rate `a = 2/κ = 3/4` used by every Loewner
/// evolution here; with this normalization the driving Brownian motion has
/// unit variance per unit capacity time.
pub const LOEWNER_A: f64 = 0.75;
