//! File formats, the parallel executor and the `urnlab` command line on top
//! of `urnlab-core`.

pub mod cli;
pub mod config;
pub mod exec;
pub mod output;
