//! Command-line front end: configuration, run directories and subcommands.

pub mod artifacts;
pub mod commands;
pub mod config;
