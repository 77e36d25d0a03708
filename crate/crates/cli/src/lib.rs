//! Library surface of the `heatsched` binary: configuration types and
//! subcommand implementations, exposed so integration tests can drive
//! them directly and inspect artifacts with the same types that wrote
//! them.

pub mod commands;
pub mod config;
