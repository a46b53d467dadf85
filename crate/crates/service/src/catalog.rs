//! Directory-per-survey catalog.
//!
//! ```text
//! <root>/index.jsonl              append-only record snapshots
//! <root>/staging/                 submissions being assembled
//! <root>/surveys/<id>/source.nmea immutable upload
//! <root>/surveys/<id>/manifest.json
//! <root>/surveys/<id>/report/     latest report bundle
//! ```
//!
//! Manifests are authoritative. A submission is assembled in `staging/` and
//! becomes visible through a single directory rename, so a crash leaves it
//! either complete or absent. On open, staging leftovers are removed and the
//! index is rewritten if it disagrees with the manifests.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use gardentrack_core::report::write_atomic;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ServiceError};
use crate::metadata::{MetadataConflict, SurveyMetadata};

pub const SOURCE_FILE: &str = "source.nmea";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_DIR: &str = "report";
pub const INDEX_FILE: &str = "index.jsonl";
const SURVEYS_DIR: &str = "surveys";
const STAGING_DIR: &str = "staging";
const ID_HEX_LEN: usize = 16;
pub(crate) const REPORT_PARTIAL: &str = ".report.partial";
pub(crate) const REPORT_OLD: &str = ".report.old";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SurveyStatus {
    Received,
    Parsed,
    Analyzed,
    Failed { reason: String },
}

impl SurveyStatus {
    fn rank(&self) -> u8 {
        match self {
            SurveyStatus::Received => 0,
            SurveyStatus::Parsed => 1,
            SurveyStatus::Analyzed => 2,
            SurveyStatus::Failed { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SurveyStatus::Received => "received",
            SurveyStatus::Parsed => "parsed",
            SurveyStatus::Analyzed => "analyzed",
            SurveyStatus::Failed { .. } => "failed",
        }
    }

    /// received → parsed → analyzed, and anything not yet failed → failed.
    pub fn can_advance_to(&self, next: &SurveyStatus) -> bool {
        match (self, next) {
            (SurveyStatus::Failed { .. }, _) => false,
            (_, SurveyStatus::Failed { .. }) => true,
            (a, b) => b.rank() > a.rank(),
        }
    }

    pub fn is_pending(&self) -> bool {
        matches!(self, SurveyStatus::Received | SurveyStatus::Parsed)
    }
}

impl fmt::Display for SurveyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurveyStatus::Failed { reason } => write!(f, "failed({reason})"),
            s => f.write_str(s.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub survey_id: String,
    pub user_handle: String,
    pub device_model: Option<String>,
    pub start_time: Option<DateTime<Utc>>,
    pub received_at: DateTime<Utc>,
    /// Lowercase hex SHA-256 of the uploaded bytes.
    pub digest: String,
    pub size_bytes: u64,
    pub status: SurveyStatus,
    /// Relative to the survey directory.
    pub report_paths: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metadata_conflicts: Vec<MetadataConflict>,
}

/// Criteria for listing and clustering; every present field must match.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyFilter {
    /// Exact user handle.
    pub user: Option<String>,
    /// Case-insensitive substring of the device model.
    pub device: Option<String>,
    /// Inclusive bounds on the survey start, or on receipt when the start is unknown.
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
    /// Status name: received, parsed, analyzed or failed.
    pub status: Option<String>,
}

impl SurveyFilter {
    pub fn matches(&self, r: &SurveyRecord) -> bool {
        if self.user.as_ref().is_some_and(|u| *u != r.user_handle) {
            return false;
        }
        if let Some(d) = &self.device {
            let needle = d.to_lowercase();
            if !r
                .device_model
                .as_ref()
                .is_some_and(|m| m.to_lowercase().contains(&needle))
            {
                return false;
            }
        }
        let when = r.start_time.unwrap_or(r.received_at);
        if self.from.is_some_and(|f| when < f) || self.to.is_some_and(|t| when > t) {
            return false;
        }
        if self.status.as_ref().is_some_and(|s| s != r.status.name()) {
            return false;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Submission {
    Created(SurveyRecord),
    Duplicate(SurveyRecord),
}

impl Submission {
    pub fn record(&self) -> &SurveyRecord {
        match self {
            Submission::Created(r) | Submission::Duplicate(r) => r,
        }
    }

    pub fn is_duplicate(&self) -> bool {
        matches!(self, Submission::Duplicate(_))
    }
}

#[derive(Default)]
struct Index {
    records: HashMap<String, SurveyRecord>,
    by_digest: HashMap<String, String>,
}

impl Index {
    fn insert(&mut self, r: SurveyRecord) {
        self.by_digest.insert(r.digest.clone(), r.survey_id.clone());
        self.records.insert(r.survey_id.clone(), r);
    }
}

pub struct Catalog {
    root: PathBuf,
    index: RwLock<Index>,
    /// Held for every mutation; owns the index append handle.
    writer: Mutex<File>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_manifest(path: &Path) -> Result<SurveyRecord> {
    let text = fs::read(path).map_err(|e| ServiceError::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| ServiceError::Corrupt {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn manifest_bytes(r: &SurveyRecord) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(r).expect("serializable record");
    out.push(b'\n');
    out
}

fn index_line(r: &SurveyRecord) -> Vec<u8> {
    let mut out = serde_json::to_vec(r).expect("serializable record");
    out.push(b'\n');
    out
}

fn sync_dir(path: &Path) {
    // best effort; not every platform can open directories
    if let Ok(d) = File::open(path) {
        let _ = d.sync_all();
    }
}

impl Catalog {
    /// Opens or creates a catalog, repairing the index from the manifests.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let surveys = root.join(SURVEYS_DIR);
        let staging = root.join(STAGING_DIR);
        fs::create_dir_all(&surveys).map_err(|e| ServiceError::io(&surveys, e))?;
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| ServiceError::io(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| ServiceError::io(&staging, e))?;

        let mut index = Index::default();
        let entries = fs::read_dir(&surveys).map_err(|e| ServiceError::io(&surveys, e))?;
        for entry in entries {
            let dir = entry.map_err(|e| ServiceError::io(&surveys, e))?.path();
            if !dir.is_dir() {
                continue;
            }
            for leftover in [REPORT_PARTIAL, REPORT_OLD] {
                let p = dir.join(leftover);
                if p.exists() {
                    let _ = fs::remove_dir_all(&p);
                }
            }
            let manifest = dir.join(MANIFEST_FILE);
            match read_manifest(&manifest) {
                Ok(r) => index.insert(r),
                Err(e) => tracing::warn!(error = %e, "skipping survey directory without a readable manifest"),
            }
        }

        let index_path = root.join(INDEX_FILE);
        if !index_agrees(&index_path, &index.records) {
            tracing::info!(path = %index_path.display(), "rebuilding index from manifests");
            let mut records: Vec<_> = index.records.values().collect();
            records.sort_by(|a, b| (a.received_at, &a.survey_id).cmp(&(b.received_at, &b.survey_id)));
            let bytes: Vec<u8> = records.into_iter().flat_map(index_line).collect();
            write_atomic(&index_path, &bytes)?;
        }
        let writer = OpenOptions::new()
            .append(true)
            .create(true)
            .open(&index_path)
            .map_err(|e| ServiceError::io(&index_path, e))?;
        Ok(Self {
            root,
            index: RwLock::new(index),
            writer: Mutex::new(writer),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn survey_dir(&self, id: &str) -> PathBuf {
        self.root.join(SURVEYS_DIR).join(id)
    }

    pub fn source_path(&self, id: &str) -> PathBuf {
        self.survey_dir(id).join(SOURCE_FILE)
    }

    pub fn report_dir(&self, id: &str) -> PathBuf {
        self.survey_dir(id).join(REPORT_DIR)
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("index lock").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Result<SurveyRecord> {
        self.index
            .read()
            .expect("index lock")
            .records
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSurvey(id.to_string()))
    }

    /// Matching records in order of receipt.
    pub fn list(&self, filter: &SurveyFilter) -> Vec<SurveyRecord> {
        let idx = self.index.read().expect("index lock");
        let mut out: Vec<_> = idx.records.values().filter(|r| filter.matches(r)).cloned().collect();
        out.sort_by(|a, b| (a.received_at, &a.survey_id).cmp(&(b.received_at, &b.survey_id)));
        out
    }

    /// Persists a new upload, or returns the existing record for known content.
    pub fn insert(
        &self,
        bytes: &[u8],
        user_handle: &str,
        metadata: SurveyMetadata,
        conflicts: Vec<MetadataConflict>,
        received_at: DateTime<Utc>,
    ) -> Result<Submission> {
        let digest = sha256_hex(bytes);
        let mut writer = self.writer.lock().expect("writer lock");
        let survey_id = {
            let idx = self.index.read().expect("index lock");
            if let Some(id) = idx.by_digest.get(&digest) {
                return Ok(Submission::Duplicate(idx.records[id].clone()));
            }
            // a prefix collision between different contents falls back to the full digest
            let short = &digest[..ID_HEX_LEN];
            if idx.records.contains_key(short) {
                digest.clone()
            } else {
                short.to_string()
            }
        };
        let record = SurveyRecord {
            survey_id: survey_id.clone(),
            user_handle: user_handle.to_string(),
            device_model: metadata.device_model,
            start_time: metadata.start_time,
            received_at,
            digest,
            size_bytes: bytes.len() as u64,
            status: SurveyStatus::Received,
            report_paths: Vec::new(),
            metadata_conflicts: conflicts,
        };

        let stage = self.root.join(STAGING_DIR).join(&survey_id);
        let final_dir = self.survey_dir(&survey_id);
        let assembled = (|| -> std::io::Result<()> {
            if stage.exists() {
                fs::remove_dir_all(&stage)?;
            }
            fs::create_dir_all(&stage)?;
            let mut f = File::create(stage.join(SOURCE_FILE))?;
            f.write_all(bytes)?;
            f.sync_all()?;
            let mut m = File::create(stage.join(MANIFEST_FILE))?;
            m.write_all(&manifest_bytes(&record))?;
            m.sync_all()?;
            fs::rename(&stage, &final_dir)?;
            sync_dir(&self.root.join(SURVEYS_DIR));
            Ok(())
        })();
        if let Err(e) = assembled {
            let _ = fs::remove_dir_all(&stage);
            return Err(ServiceError::io(&final_dir, e));
        }
        append_index(&mut writer, &self.root, &record)?;
        self.index.write().expect("index lock").insert(record.clone());
        Ok(Submission::Created(record))
    }

    /// Applies `change` to a record and persists the result.
    pub fn update<F>(&self, id: &str, change: F) -> Result<SurveyRecord>
    where
        F: FnOnce(&mut SurveyRecord) -> Result<()>,
    {
        let mut writer = self.writer.lock().expect("writer lock");
        let mut record = self.get(id)?;
        let before = record.status.clone();
        change(&mut record)?;
        if record.status != before && !before.can_advance_to(&record.status) {
            return Err(ServiceError::InvalidTransition {
                id: id.to_string(),
                from: before,
                to: record.status,
            });
        }
        write_atomic(&self.survey_dir(id).join(MANIFEST_FILE), &manifest_bytes(&record))?;
        append_index(&mut writer, &self.root, &record)?;
        self.index.write().expect("index lock").insert(record.clone());
        Ok(record)
    }

    pub fn advance(&self, id: &str, status: SurveyStatus) -> Result<SurveyRecord> {
        self.update(id, |r| {
            r.status = status;
            Ok(())
        })
    }
}

fn append_index(writer: &mut File, root: &Path, r: &SurveyRecord) -> Result<()> {
    writer
        .write_all(&index_line(r))
        .and_then(|_| writer.sync_data())
        .map_err(|e| ServiceError::io(root.join(INDEX_FILE), e))
}

/// True when the last snapshot per id in the index equals the manifests.
fn index_agrees(path: &Path, manifests: &HashMap<String, SurveyRecord>) -> bool {
    let Ok(file) = File::open(path) else {
        return false;
    };
    let mut latest: BTreeMap<String, SurveyRecord> = BTreeMap::new();
    for line in BufReader::new(file).lines() {
        let Ok(line) = line else { return false };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SurveyRecord>(&line) {
            Ok(r) => {
                latest.insert(r.survey_id.clone(), r);
            }
            Err(_) => return false,
        }
    }
    latest.len() == manifests.len()
        && latest.iter().all(|(id, r)| manifests.get(id) == Some(r))
}
