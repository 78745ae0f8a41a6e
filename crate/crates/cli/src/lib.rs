//! File formats, the persisted store and the experiment drivers behind the
//! `bidmatch` command.

pub mod error;
pub mod experiment;
pub mod formats;
pub mod report;
pub mod store;
pub mod synth;

pub use error::{CliError, Result};
