//! Class rebalancing for imbalanced binary classification through random
//! matrix sketching, with sampling baselines, LDA and C4.5-style trees, and
//! a replicated benchmark harness.

pub mod classifiers;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rebalance;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
