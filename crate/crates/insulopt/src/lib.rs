//! Command-line driver, file formats and thread pools for `insulopt-core`.
//!
//! ```text
//! insulopt <eig|sweep|critical-mass|shape-opt|mesh> --config FILE [--key value ...] --out DIR [--threads N] [--seed S]
//! ```
//!
//! Floats are written with 17 significant digits; runs are deterministic
//! for a fixed config and seed, independent of the thread count.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;

pub use cli::run_cli;
pub use error::CliError;
