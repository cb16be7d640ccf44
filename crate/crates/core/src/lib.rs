//! Emotional-intensity estimation from body-pose sequences.

pub mod error;
pub mod dataset;
pub mod descriptor;
pub mod kinematics;
pub mod model;
pub mod baseline;
pub mod evaluation;
pub mod streaming;

pub use error::{Error, ErrorCategory, Result};
