use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use idealflow::graph::DirectedNetwork;
use idealflow::io::NetworkDocument;
use idealflow::whatif::{Edit, Session, SessionOptions};
use serde::{Deserialize, Serialize};

/// Failures reading or writing the session journal.
#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("journal i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
}

/// One line of a session journal.
///
/// Only inputs are recorded; snapshots are recomputed on recovery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum JournalRecord {
    #[serde(rename_all = "camelCase")]
    Create {
        session_id: String,
        created_at: String,
        options: SessionOptions,
        network: NetworkDocument,
    },
    Edit {
        edit: Edit,
    },
    Undo,
}

pub struct SessionEntry {
    pub id: String,
    pub created_at: String,
    pub session: Session,
    journal: Option<File>,
}

impl SessionEntry {
    pub fn record(&mut self, rec: &JournalRecord) -> std::io::Result<()> {
        match &mut self.journal {
            Some(f) => append(f, rec),
            None => Ok(()),
        }
    }
}

fn append(f: &mut File, rec: &JournalRecord) -> std::io::Result<()> {
    let mut line = serde_json::to_string(rec).expect("journal record serializes");
    line.push('\n');
    f.write_all(line.as_bytes())?;
    f.flush()
}

pub type SharedEntry = Arc<Mutex<SessionEntry>>;

/// Sessions by id plus the optional journal directory.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, SharedEntry>>>,
    journal_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new() -> Self {
        AppState::default()
    }

    /// State that journals every session under `dir`, one `<id>.jsonl` each.
    pub fn with_journal(dir: impl Into<PathBuf>) -> Result<Self, JournalError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| JournalError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(AppState {
            sessions: Arc::default(),
            journal_dir: Some(dir),
        })
    }

    pub fn get(&self, id: &str) -> Option<SharedEntry> {
        self.sessions.read().expect("session map lock").get(id).cloned()
    }

    pub fn remove(&self, id: &str) -> bool {
        let gone = self.sessions.write().expect("session map lock").remove(id).is_some();
        if gone {
            if let Some(dir) = &self.journal_dir {
                let _ = fs::remove_file(journal_path(dir, id));
            }
        }
        gone
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a freshly created session and writes its journal header.
    pub fn insert(
        &self,
        session: Session,
        created_at: String,
        network: &DirectedNetwork,
    ) -> Result<String, JournalError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let journal = match &self.journal_dir {
            Some(dir) => {
                let path = journal_path(dir, &id);
                let io = |source| JournalError::Io {
                    path: path.clone(),
                    source,
                };
                let mut f = OpenOptions::new()
                    .create_new(true)
                    .append(true)
                    .open(&path)
                    .map_err(io)?;
                let rec = JournalRecord::Create {
                    session_id: id.clone(),
                    created_at: created_at.clone(),
                    options: session.options().clone(),
                    network: NetworkDocument::from_network(network),
                };
                append(&mut f, &rec).map_err(io)?;
                Some(f)
            }
            None => None,
        };
        let entry = SessionEntry {
            id: id.clone(),
            created_at,
            session,
            journal,
        };
        self.sessions
            .write()
            .expect("session map lock")
            .insert(id.clone(), Arc::new(Mutex::new(entry)));
        Ok(id)
    }

    /// Rebuilds every journaled session found in the journal directory.
    pub fn recover(&self) -> Result<usize, JournalError> {
        let Some(dir) = &self.journal_dir else {
            return Ok(0);
        };
        let read = fs::read_dir(dir).map_err(|source| JournalError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in &paths {
            let entry = replay_journal(path)?;
            self.sessions
                .write()
                .expect("session map lock")
                .insert(entry.id.clone(), Arc::new(Mutex::new(entry)));
        }
        Ok(paths.len())
    }
}

fn journal_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

fn replay_journal(path: &Path) -> Result<SessionEntry, JournalError> {
    let io = |source| JournalError::Io {
        path: path.to_path_buf(),
        source,
    };
    let corrupt = |line: usize, reason: String| JournalError::Corrupt {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut entry: Option<SessionEntry> = None;
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JournalRecord = serde_json::from_str(&line).map_err(|e| corrupt(k + 1, e.to_string()))?;
        match (rec, entry.as_mut()) {
            (
                JournalRecord::Create {
                    session_id,
                    created_at,
                    options,
                    network,
                },
                None,
            ) => {
                let net = network.to_network().map_err(|e| corrupt(k + 1, e.to_string()))?;
                let session = Session::new(net, options).map_err(|e| corrupt(k + 1, e.to_string()))?;
                entry = Some(SessionEntry {
                    id: session_id,
                    created_at,
                    session,
                    journal: None,
                });
            }
            (JournalRecord::Edit { edit }, Some(e)) => {
                e.session.apply(edit).map_err(|err| corrupt(k + 1, err.to_string()))?;
            }
            (JournalRecord::Undo, Some(e)) => {
                e.session.undo().map_err(|err| corrupt(k + 1, err.to_string()))?;
            }
            _ => return Err(corrupt(k + 1, "journal must start with a single create record".into())),
        }
    }
    let mut entry = entry.ok_or_else(|| corrupt(0, "empty journal".into()))?;
    entry.journal = Some(OpenOptions::new().append(true).open(path).map_err(io)?);
    Ok(entry)
}
