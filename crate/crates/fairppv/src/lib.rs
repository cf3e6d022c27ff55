//! Post-processing toolkit for fair binary classification under predictive
//! parity: estimate group-conditional label probabilities, check a
//! sufficient condition, and search group-wise thresholds whose positive
//! predictive values match while minimizing cost-sensitive risk. A
//! closed-form Gaussian mixture oracle provides exact fair-optimal
//! classifiers to validate the empirical pipeline against.

pub mod calibration;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gaussian;
pub mod metrics;
mod rng;
pub mod score_model;
pub mod special;

pub use error::{Error, Result};
pub use rng::derive_seed;
