//! Subcommand drivers. Each takes a resolved [`Config`](crate::Config) and
//! writes its records under an output directory.

pub mod benchmark;
pub mod distill;
pub mod mpc;
pub mod plan;

use std::path::PathBuf;

/// Where and how a command writes.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Keep finished cells from an earlier run and only add missing ones.
    pub resume: bool,
    pub threads: usize,
}
