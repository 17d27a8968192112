//! Confidence sets for the risk-optimal approximating model in Gaussian
//! sequence models.
//!
//! The library provides:
//! - noncentral chi-square numerics (CDF, quantiles, noncentrality
//!   inversion, exponential tail bounds) in [`ncchi2`];
//! - the sequence-model data layer (signals, variance models, candidate
//!   families, risk/loss functionals) in [`seqmodel`];
//! - the multiscale region for nested candidate families with simulated
//!   least-favorable critical values in [`multiscale`];
//! - the coupling construction used to validate the nested calibration in
//!   [`coupling`];
//! - the general-family region built from simultaneous noncentrality
//!   intervals in [`general`];
//! - the Brownian-argmin toy problem and its rate experiment in [`toy`];
//! - replicated experiment drivers in [`harness`] and file formats in
//!   [`files`].
//!
//! All randomized routines are deterministic given a seed: replicate `i`
//! always draws from RNG substream `i`, so results do not depend on the
//! number of worker threads (see [`exec`]).

pub mod coupling;
pub mod error;
pub mod exec;
pub mod files;
pub mod general;
pub mod harness;
pub mod multiscale;
pub mod ncchi2;
pub mod rng;
pub mod seqmodel;
pub mod stats;
pub mod toy;

pub use error::{Error, Result};
