//! Simulation and verification toolkit for Markov chains killed on leaving a cone.
//!
//! The crate is organised bottom-up:
//!
//! - [`cone`]: cone geometry and the Brownian harmonic function `u`,
//! - [`chain`]: transition kernels and counter-based random streams,
//! - [`oracle`]: exact lattice enumeration and Brownian baselines,
//! - [`mc`]: reproducible parallel Monte Carlo estimators,
//! - [`analysis`]: tail fits and the asymptotic checks built on the estimators,
//! - [`config`], [`output`], [`cli`]: config-driven experiment runner.

pub mod analysis;
pub mod battery;
pub mod chain;
pub mod cli;
pub mod config;
pub mod cone;
pub mod error;
pub mod mc;
pub mod oracle;
pub mod output;
pub mod quad;

pub use chain::{ChainModel, ModelSpec, PathRng, RngState};
pub use cone::{Cone, ConeSpec};
pub use error::{Error, Result};
