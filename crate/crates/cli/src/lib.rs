//! File formats, reports and the command-line driver around `perifix-core`.
//!
//! Models are JSON documents of type `closed_loop` (arbitrary field `f(t, x, u)` with output
//! `h(x)` and a state box) or `gene` (cyclic gene-regulation generator); see
//! [`config::ModelConfig`].

pub mod args;
pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod paper;
pub mod report;

pub use error::CliError;
