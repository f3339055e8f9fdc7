//! Surrogate-based design coupling analysis.
//!
//! Train sparse Gaussian-process surrogates on sampled responses, measure
//! how re-optimizing one design variable reacts to perturbing another, and
//! turn those coupling matrices into staged optimization plans or small
//! influential variable subsets.

pub mod bench;
pub mod cli;
pub mod dataset;
pub mod dca;
mod error;
pub mod linalg;
pub mod manifest;
pub mod optimizer;
pub mod sampling;
pub mod sgp;
pub mod space;
pub mod strategy;
pub mod util;

pub use error::{Error, Result};
