//! Aggregation of crowdsourced binary labels and fairness-aware post-processing.
//!
//! The crate has four layers:
//!
//! - [`data`]: sparse vote matrices, protected-group assignments, CSV
//!   loading/saving, synthetic dataset generation, and seeded splitting.
//! - [`aggregate`]: label aggregators that turn votes into per-task posterior
//!   probabilities — majority vote, posterior weighting under an annotator
//!   confusion model, and EM estimation of annotator skills.
//! - [`fair`] and [`baseline`]: post-processors that trade accuracy for a
//!   demographic-parity budget. [`fair::fairify`] builds an optimal randomized
//!   group-threshold classifier on top of any posterior table; `baseline`
//!   provides a label-flipping baseline for comparison.
//! - [`theory`]: exact numerical routines (Poisson-binomial pmf, error
//!   exponents, sup-pmf constants) used to check the accuracy and parity
//!   bounds that motivate the aggregators.
//!
//! [`experiments`] wires the layers into reproducible experiment drivers, and
//! the `faircrowd` binary exposes everything on the command line.
//!
//! All randomness is derived from explicit `u64` seeds through counter-based
//! streams ([`rng`]), so every run is bit-reproducible.

pub mod aggregate;
pub mod baseline;
pub mod data;
pub mod error;
pub mod experiments;
pub mod fair;
pub mod metrics;
mod opt;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
