//! Self-describing run records, persisted as append-only JSON lines.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const RUNS_FILE: &str = "runs.jsonl";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fields outside the deterministic payload.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// History-dependent context, such as a running minimum over earlier runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Value>,
}

/// Everything needed to re-run a command and check its results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub version: String,
    pub results: Value,
    pub meta: Meta,
}

impl RunRecord {
    pub fn new(command: &str, params: Value, seed: u64, results: Value) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            command: command.to_string(),
            params,
            seed,
            version: VERSION.to_string(),
            results,
            meta: Meta {
                timestamp,
                context: None,
            },
        }
    }
}

pub fn runs_path(dir: &Path) -> PathBuf {
    dir.join(RUNS_FILE)
}

pub fn append(dir: &Path, record: &RunRecord) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = runs_path(dir);
    let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
    writeln!(f, "{}", serde_json::to_string(record)?)?;
    Ok(path)
}

/// All records in a JSON-lines file; a missing file reads as empty.
pub fn load(path: &Path) -> Result<Vec<RunRecord>, CliError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CliError::Io(format!("{}: {e}", path.display()))),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Io(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}
