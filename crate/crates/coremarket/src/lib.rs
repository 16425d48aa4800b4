//! IO companion to `coremarket-core`: file formats and the CLI driver.

pub mod cli;
pub mod fmt;

pub use coremarket_core as core;
