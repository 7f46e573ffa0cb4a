use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Version string mixed into every cache key.
pub const ARTIFACT_VERSION: &str = concat!("normbranch-", env!("CARGO_PKG_VERSION"), "/1");

/// SHA-256 over the version and the canonical JSON of the config (keys
/// sorted, floats in shortest round-trip form).
pub fn config_hash(config: &RunConfig) -> Result<String, CliError> {
    let canonical = canonical_json(config)?;
    let mut h = Sha256::new();
    h.update(ARTIFACT_VERSION.as_bytes());
    h.update(b"\n");
    h.update(canonical.as_bytes());
    Ok(hex::encode(h.finalize()))
}

pub fn canonical_json(config: &RunConfig) -> Result<String, CliError> {
    let v = serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| CliError::config(e.to_string()))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

/// A cached run: the exact bytes emitted, keyed by config hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub version: String,
    pub created_unix_ms: u128,
    pub config: Value,
    pub exit_code: i32,
    pub summary: String,
    pub csv: Option<String>,
}

impl RunRecord {
    pub fn new(config: &RunConfig, hash: &str, exit_code: i32, summary: String, csv: Option<String>) -> Self {
        let created_unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        Self {
            config_hash: hash.to_owned(),
            version: ARTIFACT_VERSION.to_owned(),
            created_unix_ms,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            exit_code,
            summary,
            csv,
        }
    }
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    /// `$NORMBRANCH_CACHE_DIR`, else `$XDG_CACHE_HOME/normbranch`, else
    /// `$HOME/.cache/normbranch`.
    pub fn from_env() -> Option<Self> {
        let dir = std::env::var_os("NORMBRANCH_CACHE_DIR")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("XDG_CACHE_HOME").map(|d| PathBuf::from(d).join("normbranch")))
            .or_else(|| std::env::var_os("HOME").map(|d| PathBuf::from(d).join(".cache").join("normbranch")))?;
        Some(Self { dir })
    }

    fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    /// A record whose hash and version match; unreadable entries are misses.
    pub fn load(&self, hash: &str) -> Option<RunRecord> {
        let text = std::fs::read_to_string(self.path(hash)).ok()?;
        let rec: RunRecord = serde_json::from_str(&text).ok()?;
        (rec.config_hash == hash && rec.version == ARTIFACT_VERSION).then_some(rec)
    }

    pub fn store(&self, record: &RunRecord) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(record).map_err(|e| CliError::failed(e.to_string()))?;
        write_atomic(&self.path(&record.config_hash), text.as_bytes())
    }
}
