//! Command-line surface of the `activecl` experiments: configuration,
//! experiment execution and reporting.

pub mod config;
pub mod report;
pub mod run;
pub mod svg;

pub use config::{ConfigError, Profile, RunConfig};
pub use report::cmd_report;
pub use run::{cmd_gen_data, cmd_run};
