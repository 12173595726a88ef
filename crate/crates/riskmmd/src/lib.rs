//! Configuration files, noise presets, the `riskmmd` command line and the
//! benchmark drivers built on [`riskmmd_core`].

pub mod certificate;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pool;
pub mod presets;

pub use config::{Config, SCHEMA_VERSION};
pub use error::{Error, Result};
