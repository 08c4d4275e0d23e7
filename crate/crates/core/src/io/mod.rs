//! File formats: structures, run configuration, output tables and manifests.

mod config;
mod format;
mod manifest;
mod pdb;

pub use config::{RunConfig, ScheduleConfig};
pub use format::{fmt_sig, round_sig, Table, SIG_DIGITS};
pub use manifest::RunManifest;
pub use pdb::{parse_pdb, read_pdb, write_pdb};
