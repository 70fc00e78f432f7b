//! Photonic randomness toolkit: simulation of multiplexed single-photon
//! entropy sources, paired-sequence encoding, statistical verification,
//! seeded Toeplitz extraction, and a delegated-verification wire protocol.
//!
//! The analytic core (`photon_stats`, the entropy diagnostics in
//! `sequence_codec`) is generic over the scalar type through [`real::Real`];
//! the aliases at the crate root fix `f64`, which every shipped code path
//! uses.

pub mod bits;
pub mod config;
pub mod delegation;
pub mod extractor;
pub mod files;
pub mod optics_sim;
pub mod photon_stats;
pub mod randomness_tests;
pub mod real;
pub mod sequence_codec;

/// Detector/noise model with `f64` scalars.
pub type NoiseModel = photon_stats::NoiseModel<f64>;
/// Extraction parameters with `f64` scalars.
pub type ExtractionParams = photon_stats::ExtractionParams<f64>;
/// Four-outcome state probabilities with `f64` scalars.
pub type ProbVector = sequence_codec::ProbVector<f64>;

pub use bits::BitString;
pub use sequence_codec::PairedSequences;
