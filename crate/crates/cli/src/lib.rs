//! File formats, run configuration and report emission for the `neuroneval`
//! command-line tool.

pub mod args;
pub mod matrix;
pub mod report;
mod run;

pub use args::{Cli, RunConfig};
pub use run::{CURVE_HEADER, EXIT_RUNTIME, EXIT_VALIDATION, Failure, Rendered, render, run};
