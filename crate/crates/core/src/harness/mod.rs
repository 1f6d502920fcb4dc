//! Run configuration, checkpoints, output files and the command drivers
//! behind the `ns2d` binary.

mod checkpoint;
mod commands;
mod config;
mod output;

pub use checkpoint::{Checkpoint, CheckpointHeader, CHECKPOINT_VERSION};
pub use config::{RunConfig, StatisticsSettings, SweepSettings};
pub use output::{build_identity, sha256_file, Artifact, Cell, CsvTable, RunManifest, MANIFEST_VERSION};
pub use commands::{
    checkpoint_name, identity_reports, ou_config, run_panel, simulate, structure, sweep, verify, verify_suite, CheckRow,
    Outcome, RunContext, Suite, ORACLE_TOLERANCE,
};
