//! Command-line driver for the `ising-emachine` library: configuration,
//! sweeps, DOT export and validation.

pub mod app;
pub mod config;
pub mod dot;
pub mod error;
pub mod pipeline;
pub mod validate;

pub use error::CliError;
