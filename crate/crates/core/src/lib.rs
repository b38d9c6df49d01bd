//! Quantum semantic communication simulator.
//!
//! Classical traffic is embedded into qudit states, compressed into a small
//! set of semantic centroids by Hilbert-space k-means, and pushed through a
//! depolarizing teleportation link. Each communication round reports the
//! resources spent (centroids vs. raw samples), the minimal output entropy of
//! the device noise and the fidelity achieved on the link.
//!
//! Module map:
//!
//! - [`qudit`]: pure and mixed qudit states, fidelity and entropy.
//! - [`embedding`]: classical feature vectors to qudit states.
//! - [`clustering`]: k-means++ / Lloyd clustering in Hilbert space.
//! - [`channel`]: depolarizing noise, teleportation link, purification.
//! - [`traffic`]: largest-extreme-value gaming traffic generator.
//! - [`pipeline`]: end-to-end rounds, experiments and curves.
//! - [`output`]: canonical JSON and CSV writers.
//! - [`cli`]: command-line front end.

#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod clustering;
pub mod embedding;
mod error;
pub mod output;
pub mod pipeline;
pub mod qudit;
pub mod rng;
pub mod traffic;

pub use error::{Error, Result};

/// Double-precision complex amplitude.
pub type C64 = nalgebra::Complex<f64>;
