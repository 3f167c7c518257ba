//! File formats and commands behind the `voicepipe` binary.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

pub use commands::CliError;
