//! Exact simulation and Monte Carlo measure analysis of one-dimensional
//! cellular automata.
//!
//! The crate is organised around a small number of exact primitives and the
//! estimators built on top of them:
//!
//! - [`ca`]: local rules (block maps), finite windows evolved along their light
//!   cone, and periodic tori.
//! - [`measure`]: Bernoulli and stationary Markov source measures with exact
//!   cylinder probabilities and conditional sampling.
//! - [`gilman`]: truncated B-set membership, the equicontinuity ratio
//!   estimator, witness search and a heuristic classifier.
//! - [`cesaro`]: Cesàro-mean estimates of image measures on cylinders.
//! - [`entropy`]: column-word entropy traces.
//! - [`periodic`]: torus cycle detection and periodic-point density checks.
//! - [`zoo`]: built-in rules and the rule file format.
//!
//! Every randomized operation takes a [`RandomStream`] and is reproducible
//! regardless of the number of rayon worker threads.

#![forbid(unsafe_code)]

pub mod ca;
pub mod cesaro;
pub mod entropy;
mod error;
pub mod gilman;
pub mod measure;
pub mod periodic;
pub mod rng;
pub mod stats;
pub mod zoo;

pub use ca::{LocalRule, Symbol, TorusConfig, WindowConfig};
pub use error::{Error, Result};
pub use measure::StochasticMeasure;
pub use rng::RandomStream;
