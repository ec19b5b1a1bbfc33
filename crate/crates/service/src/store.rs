//! Append-only session files. Each session is `<id>.scenario.json` plus
//! `<id>.jsonl` holding the episode log records (header, turns, end). Every
//! append is flushed to disk before the caller replies.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tripgym::domain::{EpisodeLog, LogRecord, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

/// An open session log positioned at its end.
#[derive(Debug)]
pub struct SessionFile {
    path: PathBuf,
    file: File,
}

impl SessionFile {
    pub fn append(&mut self, record: &LogRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(record).expect("log records serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_at(&self.path))?;
        self.file.sync_data().map_err(io_at(&self.path))
    }
}

/// What a session file holds after recovery.
#[derive(Debug)]
pub struct Stored {
    pub scenario: Scenario,
    pub log: EpisodeLog,
    /// Set when a torn final line was dropped.
    pub repaired: bool,
}

/// Writes through a temporary file and renames, so readers never see a
/// partial document.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(io_at(&tmp))?;
    f.write_all(bytes).map_err(io_at(&tmp))?;
    f.sync_all().map_err(io_at(&tmp))?;
    fs::rename(&tmp, path).map_err(io_at(path))
}

impl Store {
    pub fn open(data_dir: &Path) -> Result<Store, StoreError> {
        let dir = data_dir.join("sessions");
        fs::create_dir_all(&dir).map_err(io_at(&dir))?;
        Ok(Store { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn scenario_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.scenario.json"))
    }

    fn sync_dir(&self) -> Result<(), StoreError> {
        File::open(&self.dir).and_then(|d| d.sync_all()).map_err(io_at(&self.dir))
    }

    /// Persists the scenario and the log header of a new session.
    pub fn create(&self, id: &str, scenario: &Scenario, log: &EpisodeLog) -> Result<SessionFile, StoreError> {
        write_atomic(&self.scenario_path(id), &serde_json::to_vec(scenario).expect("scenario serializes"))?;
        let path = self.log_path(id);
        let file = OpenOptions::new().create_new(true).append(true).open(&path).map_err(io_at(&path))?;
        let mut out = SessionFile { path, file };
        out.append(&log.header())?;
        self.sync_dir()?;
        Ok(out)
    }

    pub fn open_append(&self, id: &str) -> Result<SessionFile, StoreError> {
        let path = self.log_path(id);
        let file = OpenOptions::new().append(true).open(&path).map_err(io_at(&path))?;
        Ok(SessionFile { path, file })
    }

    pub fn exists(&self, id: &str) -> bool {
        self.log_path(id).is_file() && self.scenario_path(id).is_file()
    }

    /// Session ids with a log on disk, sorted.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(&self.dir)
            .map_err(io_at(&self.dir))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".jsonl")).map(str::to_string))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Reads a session back. A torn final line (a crash mid-append, before
    /// any reply went out) is dropped and the file rewritten without it.
    pub fn load(&self, id: &str) -> Result<Stored, StoreError> {
        let sp = self.scenario_path(id);
        let scenario: Scenario = serde_json::from_slice(&fs::read(&sp).map_err(io_at(&sp))?)
            .map_err(|e| StoreError::Corrupt { path: sp.clone(), detail: e.to_string() })?;
        let lp = self.log_path(id);
        let text = fs::read_to_string(&lp).map_err(io_at(&lp))?;
        let parsed = EpisodeLog::from_jsonl_lenient(&text)
            .map_err(|e| StoreError::Corrupt { path: lp.clone(), detail: e.to_string() })?;
        let clean = parsed.log.to_jsonl();
        let repaired = clean != text;
        if repaired {
            tracing::warn!(session = id, "dropping torn tail of session log");
            write_atomic(&lp, clean.as_bytes())?;
        }
        Ok(Stored { scenario, log: parsed.log, repaired })
    }
}
