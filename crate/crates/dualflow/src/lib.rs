//! File formats, run configuration and the command-line front end for
//! `dualflow-core`.
//!
//! The `dualflow` binary has three commands:
//!
//! * `run <config.json>`: evolves the configured flow, writes states, fluxes,
//!   per-step certificates and a summary. Exit code 0 when every step is
//!   certified, 2 when a step fails to converge or certify, 1 on
//!   configuration or IO errors.
//! * `table <lagrangian.json> <samples.csv>`: prints `f`, `f⁰`, `f*` and a
//!   Fenchel–Young check per sample.
//! * `certify <state.csv> <flux.csv> <config.json>`: certifies a stored pair
//!   against the configured step and prints the report.

pub mod commands;
pub mod config;
pub mod expr;
pub mod fields;
pub mod report;
