//! Progressive self-training for zero-shot sentiment transfer from a labeled
//! resource-rich-language corpus to unlabeled code-switched text.
//!
//! The crate is organised around the stages of a run:
//!
//! * [`corpus`] loads, splits and balances datasets.
//! * [`langid`] tokenizes text and measures the resource-rich word fraction.
//! * [`classifier`] holds the pluggable classifier slot: a hashed-feature
//!   logistic model and an adapter for an external process.
//! * [`curriculum`] buckets the target corpus and selects confident instances.
//! * [`pipeline`] runs the progressive method, its baselines and ablations.
//! * [`evaluation`] scores runs, probes out-of-distribution fractions and
//!   compares paired score lists.
//! * [`synthgen`] generates the synthetic two-language benchmark.
//! * [`cli`] wires everything into the `progst` executable.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod curriculum;
mod error;
pub mod evaluation;
pub mod langid;
pub mod pipeline;
pub mod seed;
pub mod synthgen;

pub use error::{Error, Result};
