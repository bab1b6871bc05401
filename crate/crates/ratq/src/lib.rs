//! Experiment harness for `ratq-core`: declarative TOML configs, parallel
//! trial runners, versioned CSV output, TOML summaries and on-disk encoded
//! blocks with sidecar headers.
//!
//! A run writes `<out>/<kind>.csv`, `<out>/<kind>.summary.toml` and, for
//! quantize runs that ask for it, `<out>/blocks/trial_NNNNNN.{bin,toml}`.

pub mod config;
pub mod derive;
pub mod experiments;
pub mod persist;
pub mod report;

use std::path::{Path, PathBuf};

use anyhow::Context;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, Artifact};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "RATQ_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub passed: bool,
}

/// Runs `cfg` on a pool of `workers` threads (0 picks rayon's default).
pub fn run_with_workers(cfg: &ExperimentConfig, workers: usize) -> anyhow::Result<Artifact> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building the worker pool")?;
    pool.install(|| run_experiment(cfg))
}

/// Writes an artifact's files under `out`.
pub fn write_artifact(artifact: &Artifact, out: &Path) -> anyhow::Result<RunOutcome> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let kind = &artifact.summary.kind;
    let csv = out.join(format!("{kind}.csv"));
    let summary = out.join(format!("{kind}.summary.toml"));
    artifact.table.write(&csv)?;
    artifact.summary.write(&summary)?;
    for block in &artifact.blocks {
        let stem = out.join(&block.stem);
        if let Some(dir) = stem.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        persist::save_block(&stem, &block.header, &block.bytes)?;
    }
    Ok(RunOutcome {
        csv,
        summary,
        passed: artifact.summary.passed,
    })
}
