//! Library surface of the `isb` command line: configuration model,
//! CSV/JSON formats, and the run orchestration.

pub mod config;
pub mod csv_io;
pub mod runner;
