//! Batch front end: reads a run configuration, runs one experiment and
//! writes its CSV/JSON artifacts.

pub mod app;
pub mod config;
pub mod error;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use run::{run, Command, Outcome};
