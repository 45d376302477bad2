//! Logical Wigner's-Friend scenarios: scenario modeling, augmented-circuit
//! compilation, Born-rule prediction, and an epistemic reasoning engine
//! that reproduces (and dissects) multi-agent paradox arguments.

pub mod collider;
pub mod compile;
pub mod epistemic;
pub mod error;
pub mod exec;
pub mod format;
pub mod library;
pub mod predict;
pub mod report;
pub mod scenario;
pub mod tensor;

pub use error::{Error, Result};
