//! Orchestration behind the `foodcast` binary: configuration, run
//! manifests and one function per subcommand.

pub mod commands;
pub mod config;
pub mod manifest;

pub use config::{GridSpec, PhaseSelection, PipelineConfig};
pub use manifest::RunManifest;
