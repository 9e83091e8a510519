//! Contingency screening for AC power networks.
//!
//! The crate enumerates single and ordered double outages of lines,
//! transformers and generators, classifies every post-contingency state as
//! secure or severe (power-flow divergence, operating-limit violation,
//! islanding or small-signal instability) and ranks components by a risk
//! index that weights severity with component failure rates.
//!
//! Module map:
//!
//! - [`grid`]: immutable network model and bus admittance matrix.
//! - [`caseio`]: native JSON cases, MATPOWER import, reliability and
//!   dynamics tables.
//! - [`powerflow`]: redispatch, Newton-Raphson AC power flow, limit checks.
//! - [`topology`]: island detection.
//! - [`smallsignal`]: classical multimachine linearization and eigenvalues.
//! - [`engine`]: scenario enumeration, evaluation and persisted parallel runs.
//! - [`risk`]: risk index aggregation and report emission.

pub mod caseio;
pub mod engine;
pub mod error;
pub mod grid;
pub mod powerflow;
pub mod risk;
pub mod smallsignal;
pub mod topology;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use grid::{
    AdmittanceMatrix, Branch, BranchKind, Bus, BusKind, ComponentKind, ComponentRef, Generator,
    GridCase,
};
