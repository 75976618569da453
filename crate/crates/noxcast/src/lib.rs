//! Files, synthetic data, the parallel experiment runner and the command
//! line front end around `noxcast-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod synth;

pub use error::{CliError, ExitCode};
