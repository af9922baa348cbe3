//! File formats, reports and the command-line driver for `heavyspec-core`.

pub mod cli;
pub mod formats;
pub mod report;
pub mod settings;

pub use heavyspec_core as core;
