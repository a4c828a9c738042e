//! Recommendation engine for Live and Catch-up TV with an offline
//! evaluation harness.
//!
//! The pipeline runs: [`ingestion`] parses the program guide and view log,
//! [`features`] turns a history window into contextual `<user, program>`
//! features, [`ltr`] learns a LambdaMART ranker over them, [`rerank`]
//! re-orders its output for diversity and novelty, and [`eval`]
//! cross-validates everything against the baselines in [`recommenders`]
//! and [`wrmf`] with the measures in [`metrics`]. [`synthgen`] produces
//! test data.
//!
//! Data-parallel work goes through [`par`], which uses rayon when the
//! default `parallel` feature is on and plain iterators otherwise. Results
//! are identical either way.

pub mod domain;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingestion;
pub mod ltr;
pub mod metrics;
pub mod par;
pub mod recommenders;
pub mod rerank;
pub mod seed;
pub mod synthgen;
pub mod wrmf;

pub use error::{Error, Result};
