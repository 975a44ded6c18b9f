//! File formats, experiment drivers and the command-line front end for
//! correlation clustering on Node Features Model graphs.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;

pub use error::{Error, Result};
