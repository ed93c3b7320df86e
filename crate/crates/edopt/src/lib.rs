//! File formats, reports and the command-line driver around `edopt-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod mps;
pub mod report;
