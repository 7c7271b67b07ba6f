//! Bregman power k-means, KNN-gravity dataset improvement and the guarded
//! `(eta, K, d)` grid search, with generators, baselines and external
//! validity metrics.
//!
//! Data-parallel loops go through [`par`]; disable the default `parallel`
//! feature for a purely sequential build with identical results.

pub mod baselines;
pub mod clustering;
pub mod data;
pub mod dbgsa;
pub mod divergence;
pub mod error;
pub mod experiments;
pub mod gravity;
pub mod manifest;
pub mod metrics;
pub mod par;
pub mod power_mean;
pub mod seed;

pub use clustering::{ClusterConfig, ClusterMethod, ClusterResult};
pub use data::DataMatrix;
pub use divergence::DivergenceFamily;
pub use error::{Error, Result};
