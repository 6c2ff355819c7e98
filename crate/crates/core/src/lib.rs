//! Supersymmetric hyperbolic sigma model `H^{2|2}` on finite graphs.
//!
//! - [`grassmann`]: exterior algebra, even functions, Berezin derivatives,
//!   supermatrices and the super scaling group.
//! - [`graph`]: weighted graphs with a pinned vertex and wired towers.
//! - [`sigma_core`]: the bosonic density `ρ^W(u, s)` in its three forms, the
//!   observables `β, θ` and their inversions.
//! - [`sampler`]: Metropolis sampler for `u` with exact Gaussian `s | u`, and
//!   Berezin-first super expectations.
//! - [`scaling`]: the real scaling group, closed-form Laplace transforms and
//!   the Radon–Nikodym density.
//! - [`supersym`]: superfunctions, super scalings, `φ̄, φ` and the Ward and
//!   martingale identities.
//! - [`verify`]: the registry of identity checks and their reports.

// Domain checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grassmann;
pub mod graph;
pub mod sigma_core;
pub mod sampler;
pub mod scaling;
pub mod supersym;
pub mod verify;

pub use error::{Error, Result};
