//! Link-level Monte Carlo simulator for millimeter-wave initial cell search.
//!
//! A base station sweeps its analog codebook while the mobile station listens
//! with one of four receiver architectures:
//!
//! - ABF: a single analog combiner,
//! - PSN: several analog combiners feeding a comparator and a single RF chain,
//! - HBF: several analog combiners, each with its own RF chain, combined digitally,
//! - DBF: one RF chain per antenna.
//!
//! The mobile station picks its combiner either from (possibly erroneous)
//! context information about the base-station direction, by exhaustive search
//! or at random. The access error probability is the probability that the
//! post-sweep SNR falls below a threshold.
//!
//! Modules, bottom up:
//!
//! - [`array`]: steering vectors, quantized-phase codebooks, beam geometry.
//! - [`channel`]: geometric channel sampling, path loss and noise power.
//! - [`schemes`]: combiner selection and per-architecture SNR.
//! - [`search`]: CI-based, exhaustive and random cell search sweeps.
//! - [`montecarlo`]: access error estimation over parameter grids.
//! - [`power`]: receiver power consumption models.

pub mod array;
pub mod channel;
mod error;
pub mod montecarlo;
pub mod power;
pub mod schemes;
pub mod search;

pub use error::{Error, Result};
pub use num_complex::Complex64;
