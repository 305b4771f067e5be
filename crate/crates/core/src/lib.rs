//! Uncertainty quantification workflow toolkit.
//!
//! The crate follows a five-step protocol: define the quantity of interest,
//! identify and characterize the uncertainty sources ([`dist`]), screen them
//! ([`screening`]), propagate them through a model ([`sampling`],
//! [`resampling`], [`propagation`]) and summarize the result as p-boxes,
//! expanded uncertainties or metric distributions ([`report`]).

pub mod dist;
pub mod error;
pub mod metrics;
pub mod models;
pub mod propagation;
pub mod report;
pub mod resampling;
pub mod sampling;
pub mod screening;
pub mod stats;
pub mod verification;

pub use error::{Error, Result};
