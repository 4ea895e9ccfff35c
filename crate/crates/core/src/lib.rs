//! Time-aware evaluation of cross-project defect prediction.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod metrics;
pub mod pairs;
pub mod report;
pub mod results;
pub mod stats;
pub mod treatments;
pub mod tree;
