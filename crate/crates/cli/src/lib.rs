//! Configuration, persistence and subcommands of the `aggf` binary.

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod snapshot;
