//! Configuration-driven experiments on top of `spiralwave-core`: wavenumber
//! tables, asymptotic trajectories, PDE runs, comparisons and orbit scans.

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod plot;
pub mod scan;

pub use commands::{run, Command};
pub use compare::{run_compare, ComparisonReport};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use scan::run_bifurcation_scan;
