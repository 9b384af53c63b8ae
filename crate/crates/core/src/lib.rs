//! Probabilistic parking functions: cars that walk left or right at random
//! until they find a free spot.

pub mod analytics;
pub mod combinatorics;
pub mod error;
pub mod experiments;
pub mod parking;
pub mod samplers;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
