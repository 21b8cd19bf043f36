//! Identification coding over discrete affine Poisson channels.
//!
//! A channel maps non-negative release rates `x ∈ R^N` to Poisson counts
//! `Y ~ Pois(Ā x + λ)` at `K` receptors, with `Ā = A·diag(v)`. The crate
//! builds identification codebooks by greedy sphere packing in the rank-`T`
//! subspace of `Ā`, decodes with a threshold test, estimates type I/II error
//! probabilities by Monte Carlo, evaluates the capacity bounds in the
//! `2^{(T log T) R}` scale, and ships brute-force oracles for the finite-size
//! facts behind them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affinity;
pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod experiment;
pub mod idcodec;
pub mod linalg;
pub mod oracle;
pub mod poisson;
pub mod report;
pub mod rng;

pub use affinity::{AffinityMatrix, ConditionReport, ReductionMap};
pub use bounds::CapacityBounds;
pub use channel::ChannelParams;
pub use codebook::Codebook;
pub use error::{Error, Result};
pub use experiment::ExperimentConfig;
pub use idcodec::{DecoderParams, ErrorEstimate};
pub use oracle::OracleReport;
