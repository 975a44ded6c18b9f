#![no_std]
//! Correlation clustering on signed graphs drawn from the Node Features Model.
//!
//! The crate is `no_std` + `alloc`. It contains the dense symmetric kernel,
//! the graph generator, the two doubly non-negative SDP relaxations with their
//! splitting solver, the `1-diag` and `l2-norm-diag` recovery algorithms, and
//! numerical checkers for the optimality and positive semidefiniteness
//! certificates that back them.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod certificates;
pub mod cluster;
mod error;
pub mod linalg;
pub mod nfm;
pub mod sdp;

pub use error::{Error, Result};
