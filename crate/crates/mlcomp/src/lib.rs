//! Program feature extraction, performance estimation, phase selection
//! policy training, and evaluation reporting on top of the tiny IR.

pub mod config;
pub mod dataset;
pub mod doc;
pub mod features;
pub mod deploy;
pub mod evalrep;
pub mod pe;
pub mod policy;
pub mod reinforce;

pub use features::{extract_features, feature_manifest, FeatureVector, NUM_FEATURES};
