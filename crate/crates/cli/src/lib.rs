//! Experiment runner for the water-to-air channel model: configuration,
//! subcommands, validation checks and output files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
