//! Dataset assembly, serialization and auditing.

mod io;
mod leakage;
mod splits;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

use crate::generator::GenError;
use crate::oracle::CertReport;
use crate::sample::MissingMeta;

pub use io::{read_dataset, read_jsonl, write_babi, write_dataset, write_jsonl, Format};
pub use leakage::{canonical_key, leakage, CanonicalKey, KLeakage, LeakageReport};
pub use splits::{
    build_and_write, build_splits, stream_id, write_splits, FileEntry, KRange, Manifest, SplitName, SplitPlan, Splits,
};
pub use stats::{noise_stats, NoiseRow, NoiseStats, TypeStats};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error(transparent)]
    MissingMeta(#[from] MissingMeta),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("{split} k={k}: only {found} distinct samples after {attempts} draws, {requested} requested")]
    Exhausted { split: SplitName, k: usize, requested: usize, found: usize, attempts: u64 },
    #[error("{split}: {} samples failed certification (first: {:?})", .failures.len(), .failures.first())]
    Certification { split: SplitName, failures: Vec<CertReport> },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}
