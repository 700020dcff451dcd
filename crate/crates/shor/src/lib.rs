//! Host-side companion to `shor-core`: OpenQASM 2.0 files, statistics
//! tables, invariant suites and the commands behind the `shor` binary.

pub mod commands;
pub mod invariants;
pub mod qasm;
pub mod stats;

pub use commands::{BackendChoice, CliError};
