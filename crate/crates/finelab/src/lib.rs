//! Companion crate to `finelab-core`: space files, JSON/CSV export, the
//! scenario runner and the `finelab` command line tool.

pub mod config;
pub mod error;
pub mod export;
pub mod runner;
pub mod spacefile;

pub use config::{ScenarioConfig, DEFAULTS};
pub use error::{RunError, Stage};
pub use runner::{run_scenario, RunManifest};
