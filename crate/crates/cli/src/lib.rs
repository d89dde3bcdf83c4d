//! Batch interface for validating systems, testing positivity and building
//! covariant dilations from JSON instances.

pub mod commands;
pub mod instance;
pub mod report;
pub mod stored;
