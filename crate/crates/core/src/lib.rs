//! Statistics for auditing manual review processes: inter-rater agreement,
//! hypothesis tests, error-rate intervals, bias-factor regressions,
//! difference-in-differences and a seeded panel simulator.

pub mod agreement;
pub mod cli;
pub mod did;
pub mod error;
pub mod estimation;
pub mod hypothesis;
pub mod model;
pub mod report;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
