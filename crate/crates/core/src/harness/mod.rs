//! Run configuration, dataset ingestion and the staged benchmark runner.
//!
//! A run directory holds `folds/`, `features/`, `predictions/`, `sar/`,
//! `metrics.csv`, `prevalence.csv`, `manifest.json` and `report/`. Every file
//! except the manifest is written once: a rerun that would produce different
//! bytes fails with [`HarnessError::Conflict`] instead of overwriting.

mod config;
mod ingest;
mod run;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub use config::{Binarization, ModelSpec, RunConfig, TaskSpec, Unit};
pub use ingest::{ingest_dataset, DatasetSummary, IngestedTask};
pub use run::{
    write_report, CellRecord, CellStatus, CellSummary, FaultHook, Harness, Manifest, ModelKind, ModelPlan,
    PredictionSet, Stage,
};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0} exists with different content; use a fresh output directory")]
    Conflict(PathBuf),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    /// Process exit status: 2 config, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Conflict(_) => 2,
            HarnessError::Schema(_) | HarnessError::EmptyDataset(_) | HarnessError::Data(_) | HarnessError::Missing(_) => 3,
            HarnessError::Io { .. } | HarnessError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Schema(_) => "schema",
            HarnessError::EmptyDataset(_) => "empty_dataset",
            HarnessError::Data(_) => "data",
            HarnessError::Conflict(_) => "output_conflict",
            HarnessError::Missing(_) => "missing_input",
            HarnessError::Io { .. } => "io",
            HarnessError::Internal(_) => "internal",
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn hash_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// Stable 64-bit seed for one (task, model, fold) cell.
pub fn derive_seed(global: u64, task: &str, model: &str, fold: usize) -> u64 {
    let d = hash_parts(&[
        b"cell",
        &global.to_le_bytes(),
        task.as_bytes(),
        model.as_bytes(),
        &(fold as u64).to_le_bytes(),
    ]);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Seed for the fold assignment of one task.
pub fn split_seed(global: u64, task: &str) -> u64 {
    let d = hash_parts(&[b"split", &global.to_le_bytes(), task.as_bytes()]);
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Pairs of grid cells that received the same seed, as "task/model/fold".
pub fn seed_collisions(global: u64, tasks: &[String], models: &[String], folds: usize) -> Vec<(String, String)> {
    let mut seen: std::collections::HashMap<u64, String> = std::collections::HashMap::new();
    let mut clashes = Vec::new();
    for t in tasks {
        for m in models {
            for f in 0..folds {
                let key = format!("{t}/{m}/{f}");
                if let Some(prev) = seen.insert(derive_seed(global, t, m, f), key.clone()) {
                    clashes.push((prev, key));
                }
            }
        }
    }
    clashes
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteOutcome {
    Written,
    Unchanged,
}

/// Writes `bytes` to `path` unless it already holds exactly those bytes.
/// Different existing content is a conflict.
pub fn write_once(path: &Path, bytes: &[u8]) -> Result<WriteOutcome, HarnessError> {
    match fs::read(path) {
        Ok(existing) if existing == bytes => return Ok(WriteOutcome::Unchanged),
        Ok(_) => return Err(HarnessError::Conflict(path.to_path_buf())),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(HarnessError::io(path, e)),
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))?;
    Ok(WriteOutcome::Written)
}

/// Names used as path components: letters, digits, `.`, `_` and `-`.
pub(crate) fn check_name(what: &str, name: &str) -> Result<(), HarnessError> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(HarnessError::Config(format!(
            "{what} '{name}' must be non-empty and use only letters, digits, '.', '_' or '-'"
        )))
    }
}

#[cfg(test)]
mod tests;
