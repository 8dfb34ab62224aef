//! Command-line front end for the `poisson-control` solvers and simulator.

pub mod commands;
pub mod error;
pub mod report;
pub mod spec;

pub use error::CliError;
pub use report::{Cell, Report, Table};
pub use spec::{Flags, RunSpec};
