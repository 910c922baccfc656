//! File formats and command-line plumbing around `incoherent-core`:
//! matrix CSV, experiment config files, and the report/trace writers used by
//! the `incoherent` binary.

pub mod config;
pub mod error;
pub mod matrix_csv;
pub mod reports;

pub use error::{Error, Result};
