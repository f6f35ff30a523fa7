//! Killed Feynman-Kac semigroups driven by singular Schrödinger potentials.
//!
//! The crate simulates four process families (overdamped Langevin, Lévy,
//! kinetic Langevin and interacting Lévy particles), weights their paths by
//! `exp(-∫V)`, kills them on exit from a domain, and estimates the principal
//! eigenvalue, eigenfunction and quasi-stationary distribution of the
//! resulting sub-Markov semigroup with an interacting particle system.
//!
//! All numerics are generic over [`Real`] (implemented for `f32` and `f64`).
//! The `*64` aliases below fix the scalar to `f64`, which is what the CLI and
//! the acceptance suite use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fk_engine;
pub mod geometry;
pub mod lyapunov;
pub mod oracle;
pub mod particle;
pub mod potentials;
pub mod samplers;
pub mod scalar;
pub mod stats;
pub mod streams;

pub use error::{Error, Result};
pub use scalar::Real;

pub type PotentialSpec64 = potentials::PotentialSpec<f64>;
pub type InteractionSpec64 = potentials::InteractionSpec<f64>;
pub type LineChargeSpec64 = potentials::LineChargeSpec<f64>;
pub type Schrodinger64 = potentials::Schrodinger<f64>;
pub type DriftSpec64 = potentials::DriftSpec<f64>;
pub type LevySpec64 = samplers::LevySpec<f64>;
pub type Domain64 = geometry::Domain<f64>;
pub type ModelSpec64 = dynamics::ModelSpec<f64>;
pub type ModelState64 = dynamics::ModelState<f64>;
pub type PathResult64 = fk_engine::PathResult<f64>;
pub type Ensemble64 = particle::Ensemble<f64>;
pub type Histogram64 = particle::Histogram<f64>;
pub type LyapunovSpec64 = lyapunov::LyapunovSpec<f64>;
pub type RadialProblem64 = oracle::RadialProblem<f64>;
