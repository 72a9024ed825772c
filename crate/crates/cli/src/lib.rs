//! Batch front end for the generalized Burgers solver: run configuration,
//! subcommands and artifact writing.

pub mod config;
pub mod plot;
pub mod run;
