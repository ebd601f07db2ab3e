//! Scenario files, output bundles and bundle comparison behind the CLI.

pub mod compare;
pub mod config;
mod csvio;
pub mod run;

pub use compare::{compare, Comparison};
pub use config::{Engine, Scenario, BUILTIN, SCHEMA_VERSION};
pub use run::{execute, run, RunData, Summary};
