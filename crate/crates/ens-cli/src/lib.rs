//! Library surface of the `ens` binary: configuration schema, scenario
//! catalog, run driver, series I/O, and self-checks. Kept as a library so
//! integration tests and the acceptance suite can drive runs in-process.

pub mod builtins;
pub mod checks;
pub mod config;
pub mod error;
pub mod runner;
pub mod series;
pub mod stateio;
