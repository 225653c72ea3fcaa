//! Experiment harness around `rbgc-core`: scenario files, the chain-backed
//! simulation driver, CSV/JSON exporters and the command implementations
//! behind the `rbgc` binary.

pub mod commands;
pub mod export;
pub mod lottery;
pub mod scenario;
pub mod sim;
pub mod sweep;
