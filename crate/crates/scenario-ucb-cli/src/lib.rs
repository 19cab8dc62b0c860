//! Library backing the `scenario-ucb` experiment CLI: configuration,
//! orchestration, and file emission.

pub mod config;
pub mod runner;
