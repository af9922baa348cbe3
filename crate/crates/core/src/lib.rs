//! Inverse spectral pipeline on measured weighted graphs.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every algorithm of the
//! pipeline: measured-graph Laplacians and their spectra, prescription of a
//! simple spectrum on a weighted complete graph, Walecki colorings, expander
//! cluster wiring, the periodic cell problem and corridor energies, assembly
//! of heavy-vertex networks, and the convergence experiments that compare the
//! assembled networks with their macroscopic limit. File formats, reports and
//! the command-line driver live in the `heavyspec` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod config;
pub mod eigen;
mod error;
pub mod expander;
pub mod graph;
pub mod harness;
pub mod homogenization;
pub mod inverse;
mod linalg;
pub mod surface;
pub mod topology;

pub use config::{derive_seed, Config, Guards};
pub use eigen::{spectrum_dense, spectrum_smallest_k, EigenResult, SolverMethod};
pub use error::{Error, Result};
pub use graph::{Edge, GraphBuilder, MeasuredGraph};
pub use linalg::{linear_fit, log_log_slope};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
