//! Front end for the `censreg` binary: argument parsing, dataset files and
//! result tables.

pub mod args;
pub mod dataset_io;
pub mod error;
pub mod output;

pub use args::{parse_args, Command, Format, RunConfig};
pub use error::CliError;
