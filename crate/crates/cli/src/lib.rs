//! Command-line harness around `pabo-core`: run manifests, per-run output
//! files, multi-algorithm comparisons and case-bundle generation.

pub mod bundle;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;

pub use commands::{cmd_compare, cmd_gen_case, cmd_run, cmd_validate, CompareReport, RunReport};
pub use error::{CliError, ErrorKind, Finding};
pub use manifest::{ObjectiveSpec, Overrides, RunManifest};
