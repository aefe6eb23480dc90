//! Driver for `shellnls-core`: configuration, scenarios, output files,
//! verification suites and the threaded mode executor.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod exec;
pub mod output;
pub mod scenario;
pub mod verify;
