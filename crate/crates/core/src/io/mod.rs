//! Configuration, file formats and the mode runner behind the `sqg` binary.

pub mod config;
pub mod csv;
pub mod fieldfile;
pub mod run;

pub use config::{InitialData, Mode, RunConfig};
pub use fieldfile::{read_field, write_field};
pub use run::{execute, exit_code, run, RunOutcome};
