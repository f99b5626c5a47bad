//! On-disk layout:
//!
//! ```text
//! <data>/banks/<bank_id>.json         canonical bank bytes
//! <data>/transcripts/<bank_id>.json   transcript a bank was compiled from
//! <data>/sessions/<session_id>.jsonl  event log, one event per line
//! ```
//!
//! A bank id is the hex SHA-256 of its canonical bytes.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use pal_core::pipeline::{validate_bank, BankFile, Transcript, Violation};
use pal_core::session::{parse_jsonl, replay, Session, SessionEvent};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::Mutex;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bank failed validation")]
    InvalidBank(Vec<Violation>),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn bank_id(canonical: &[u8]) -> String {
    hex::encode(Sha256::digest(canonical))
}

/// A session log that could not be loaded at startup.
#[derive(Debug, Clone)]
pub struct LoadFailure {
    pub path: PathBuf,
    pub reason: String,
}

pub type SessionHandle = Arc<Mutex<Session>>;

pub struct Store {
    root: PathBuf,
    banks: RwLock<HashMap<String, BankFile>>,
    transcripts: RwLock<HashMap<String, Transcript>>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
    load_failures: Vec<LoadFailure>,
}

fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, StoreError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl Store {
    /// Opens (creating if needed) a data directory and replays every
    /// session log in it. Logs that fail to parse or replay are skipped and
    /// reported by [`Store::load_failures`].
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        for sub in ["banks", "transcripts", "sessions"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(io(&dir))?;
        }
        let mut failures = Vec::new();

        let mut banks = HashMap::new();
        for path in files_with_ext(&root.join("banks"), "json")? {
            let bytes = fs::read(&path).map_err(io(&path))?;
            match validate_bank(&bytes) {
                Ok(bank) => {
                    banks.insert(stem(&path), bank);
                }
                Err(v) => failures.push(LoadFailure {
                    reason: format!("{} bank violations", v.len()),
                    path,
                }),
            }
        }

        let mut transcripts = HashMap::new();
        for path in files_with_ext(&root.join("transcripts"), "json")? {
            let bytes = fs::read(&path).map_err(io(&path))?;
            match serde_json::from_slice::<Transcript>(&bytes) {
                Ok(t) => {
                    transcripts.insert(stem(&path), t);
                }
                Err(e) => failures.push(LoadFailure { path, reason: e.to_string() }),
            }
        }

        let mut sessions = HashMap::new();
        for path in files_with_ext(&root.join("sessions"), "jsonl")? {
            let text = fs::read_to_string(&path).map_err(io(&path))?;
            match parse_jsonl(&text).and_then(|events| replay(&events)) {
                Ok(session) => {
                    sessions.insert(session.id.clone(), Arc::new(Mutex::new(session)));
                }
                Err(e) => failures.push(LoadFailure { path, reason: e.to_string() }),
            }
        }

        Ok(Store {
            root,
            banks: RwLock::new(banks),
            transcripts: RwLock::new(transcripts),
            sessions: RwLock::new(sessions),
            load_failures: failures,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn load_failures(&self) -> &[LoadFailure] {
        &self.load_failures
    }

    /// Validates and stores a bank; storing the same bank twice is a no-op.
    pub fn put_bank(&self, bytes: &[u8]) -> Result<(String, BankFile), StoreError> {
        let bank = validate_bank(bytes).map_err(StoreError::InvalidBank)?;
        let canonical = bank.to_canonical_bytes();
        let id = bank_id(&canonical);
        let path = self.root.join("banks").join(format!("{id}.json"));
        if !path.exists() {
            write_atomic(&path, &canonical)?;
        }
        self.banks.write().expect("bank map lock").insert(id.clone(), bank.clone());
        Ok((id, bank))
    }

    pub fn bank(&self, id: &str) -> Option<BankFile> {
        self.banks.read().expect("bank map lock").get(id).cloned()
    }

    pub fn put_transcript(&self, bank_id: &str, transcript: &Transcript) -> Result<(), StoreError> {
        let path = self.root.join("transcripts").join(format!("{bank_id}.json"));
        let bytes = serde_json::to_vec(transcript).expect("transcripts serialize");
        write_atomic(&path, &bytes)?;
        self.transcripts
            .write()
            .expect("transcript map lock")
            .insert(bank_id.to_string(), transcript.clone());
        Ok(())
    }

    pub fn transcript(&self, bank_id: &str) -> Option<Transcript> {
        self.transcripts.read().expect("transcript map lock").get(bank_id).cloned()
    }

    pub fn session(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().expect("session map lock").get(id).cloned()
    }

    /// Persists a brand-new session's log and registers it.
    pub fn insert_session(&self, session: Session) -> Result<SessionHandle, StoreError> {
        self.append_events(&session.id, &session.events)?;
        let handle = Arc::new(Mutex::new(session));
        let id = handle.try_lock().expect("fresh mutex").id.clone();
        self.sessions.write().expect("session map lock").insert(id, handle.clone());
        Ok(handle)
    }

    /// Appends events to a session's log and flushes it to disk.
    pub fn append_events(&self, session_id: &str, events: &[SessionEvent]) -> Result<(), StoreError> {
        if events.is_empty() {
            return Ok(());
        }
        let path = self.session_path(session_id);
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io(&path))?;
        let text: String = events.iter().map(SessionEvent::to_json_line).collect();
        file.write_all(text.as_bytes()).map_err(io(&path))?;
        file.sync_data().map_err(io(&path))
    }

    pub fn session_path(&self, session_id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{session_id}.jsonl"))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}
