//! Experiment runner: configuration, pipeline stages, artifacts and run
//! comparison.

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod pipeline;
pub mod study;

use std::path::{Path, PathBuf};

pub use compare::{compare_runs, ComparisonRow};
pub use config::{EstimatorSpec, RunConfig};
pub use pipeline::{execute, ModelSource, RunReport};
pub use study::{seed_study, StudyRow};

use crate::error::Error;

/// Overrides the directory that relative output paths are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "FUNDUS_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct StageFailure {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageFailure>;
}

impl<T> StageExt<T> for crate::error::Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageFailure> {
        self.map_err(|source| StageFailure { stage, source })
    }
}

/// `dir` as is when absolute, else below `$FUNDUS_OUTPUT_ROOT` (or the
/// working directory).
pub fn resolve_output(dir: &Path) -> PathBuf {
    if dir.is_absolute() {
        return dir.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(dir),
        None => dir.to_path_buf(),
    }
}
