//! Append-only storage of recommendation runs.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::intake::HealthIndicators;
use crate::recommend::{Recommendation, UserProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredAssessment {
    pub id: Uuid,
    pub stored_at: DateTime<Utc>,
    pub engine_version: String,
    pub catalog_version: String,
    pub calibration: String,
    pub indicators: HealthIndicators,
    pub profile: UserProfile,
    pub recommendation: Recommendation,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("store line {line} is not a stored assessment: {message}")]
    Corrupt { line: usize, message: String },
    #[error("id {0} already stored")]
    DuplicateId(Uuid),
}

pub trait AssessmentStore: Send + Sync {
    /// Adds a record. Records are never changed afterwards.
    fn append(&self, record: StoredAssessment) -> Result<Arc<StoredAssessment>, StoreError>;
    fn get(&self, id: &Uuid) -> Option<Arc<StoredAssessment>>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Process-local store.
#[derive(Default)]
pub struct MemoryStore {
    index: RwLock<HashMap<Uuid, Arc<StoredAssessment>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AssessmentStore for MemoryStore {
    fn append(&self, record: StoredAssessment) -> Result<Arc<StoredAssessment>, StoreError> {
        let mut index = self.index.write().unwrap();
        if index.contains_key(&record.id) {
            return Err(StoreError::DuplicateId(record.id));
        }
        let record = Arc::new(record);
        index.insert(record.id, record.clone());
        Ok(record)
    }

    fn get(&self, id: &Uuid) -> Option<Arc<StoredAssessment>> {
        self.index.read().unwrap().get(id).cloned()
    }

    fn len(&self) -> usize {
        self.index.read().unwrap().len()
    }
}

/// One JSON document per line, with every record indexed in memory.
/// Writes go through a single file handle under a mutex.
pub struct JsonlStore {
    path: PathBuf,
    writer: Mutex<File>,
    index: RwLock<HashMap<Uuid, Arc<StoredAssessment>>>,
}

impl JsonlStore {
    /// Opens or creates `path`, loading existing records. A truncated last
    /// line (an interrupted write) is cut off; any other bad line is an
    /// error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let text = if path.exists() {
            std::fs::read_to_string(&path)?
        } else {
            String::new()
        };
        let mut index = HashMap::new();
        let mut keep = text.len();
        let mut offset = 0;
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        let last = lines.iter().rposition(|l| !l.trim().is_empty());
        for (n, line) in lines.iter().enumerate() {
            let start = offset;
            offset += line.len();
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<StoredAssessment>(line) {
                Ok(r) => {
                    if index.insert(r.id, Arc::new(r)).is_some() {
                        return Err(StoreError::Corrupt {
                            line: n + 1,
                            message: "duplicate id".into(),
                        });
                    }
                }
                Err(e) if Some(n) == last => {
                    tracing::warn!(line = n + 1, error = %e, "dropping truncated last line of store");
                    keep = start;
                }
                Err(e) => {
                    return Err(StoreError::Corrupt {
                        line: n + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        let mut writer = OpenOptions::new().create(true).append(true).open(&path)?;
        if keep < text.len() {
            writer.set_len(keep as u64)?;
        }
        if keep > 0 && !text[..keep].ends_with('\n') {
            writer.write_all(b"\n")?;
        }
        Ok(Self {
            path,
            writer: Mutex::new(writer),
            index: RwLock::new(index),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl AssessmentStore for JsonlStore {
    fn append(&self, record: StoredAssessment) -> Result<Arc<StoredAssessment>, StoreError> {
        let mut line = serde_json::to_string(&record).expect("stored assessment serializes");
        line.push('\n');
        let mut writer = self.writer.lock().unwrap();
        if self.index.read().unwrap().contains_key(&record.id) {
            return Err(StoreError::DuplicateId(record.id));
        }
        writer.write_all(line.as_bytes())?;
        writer.flush()?;
        let record = Arc::new(record);
        self.index
            .write()
            .unwrap()
            .insert(record.id, record.clone());
        Ok(record)
    }

    fn get(&self, id: &Uuid) -> Option<Arc<StoredAssessment>> {
        self.index.read().unwrap().get(id).cloned()
    }

    fn len(&self) -> usize {
        self.index.read().unwrap().len()
    }
}
