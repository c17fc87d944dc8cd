//! Experiment harness for restarted NESTA: file formats, the experiment
//! drivers, run manifests and the command line.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod imageio;
pub mod manifest;
pub mod maskio;
pub mod tables;

pub use error::{HarnessError, Result};
