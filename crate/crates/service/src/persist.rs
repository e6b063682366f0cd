//! Write-ahead session log: one JSONL file per session under `session_dir`,
//! one line per turn. Each handled turn appends its user and assistant lines
//! in a single write followed by a sync, so a crash loses at most the turn in
//! flight. Recovery replays the logged user utterances and checks that the
//! engine reproduces the logged assistant turns.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use factful_core::engine::{Engine, EngineError, Session, Speaker, Turn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Replay {
        path: String,
        #[source]
        source: EngineError,
    },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

/// What recovery found in one session file.
#[derive(Debug)]
pub struct Recovered {
    pub session: Session,
    /// A trailing partial line or half-written turn was discarded.
    pub repaired: bool,
}

#[derive(Debug, Default)]
pub struct RecoveryReport {
    pub sessions: Vec<Recovered>,
    pub failures: Vec<PersistError>,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, PersistError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    pub fn create(&self, id: &str) -> Result<(), PersistError> {
        let path = self.path_for(id);
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(io(&path))?;
        file.sync_all().map_err(io(&path))?;
        sync_dir(&self.dir);
        Ok(())
    }

    /// Appends the given turns as one write.
    pub fn append(&self, id: &str, turns: &[Turn]) -> Result<(), PersistError> {
        let path = self.path_for(id);
        let mut buf = Vec::new();
        for t in turns {
            serde_json::to_writer(&mut buf, t).expect("turn serializes");
            buf.push(b'\n');
        }
        let mut file = OpenOptions::new().append(true).open(&path).map_err(io(&path))?;
        file.write_all(&buf).map_err(io(&path))?;
        file.sync_data().map_err(io(&path))
    }

    /// Loads every `*.jsonl` file. Sessions that fail to parse or replay are
    /// reported and skipped; they stay on disk untouched.
    pub fn recover(&self, engine: &Engine) -> Result<RecoveryReport, PersistError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(io(&self.dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut report = RecoveryReport::default();
        for path in paths {
            match recover_file(engine, &path) {
                Ok(r) => report.sessions.push(r),
                Err(e) => report.failures.push(e),
            }
        }
        Ok(report)
    }
}

fn sync_dir(dir: &Path) {
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

fn recover_file(engine: &Engine, path: &Path) -> Result<Recovered, PersistError> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let bytes = fs::read(path).map_err(io(path))?;
    let text = String::from_utf8_lossy(&bytes);
    let corrupt = |line: usize, message: String| PersistError::Corrupt {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut turns: Vec<Turn> = Vec::new();
    // File offset just past each parsed turn.
    let mut ends: Vec<usize> = Vec::new();
    // Byte length of the prefix made of complete, parsed lines.
    let mut good_len = 0usize;
    let mut repaired = false;
    let mut offset = 0usize;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    for (i, raw) in lines.iter().enumerate() {
        let last = i + 1 == lines.len();
        offset += raw.len();
        if raw.trim().is_empty() {
            good_len = offset;
            continue;
        }
        match serde_json::from_str::<Turn>(raw.trim_end()) {
            Ok(t) if raw.ends_with('\n') => {
                turns.push(t);
                ends.push(offset);
                good_len = offset;
            }
            // A line without its newline was cut short by a crash, even if
            // it happens to parse.
            Ok(_) if last => repaired = true,
            Err(_) if last => repaired = true,
            Err(e) => return Err(corrupt(i + 1, e.to_string())),
            Ok(_) => unreachable!("only the last line can lack a newline"),
        }
    }
    // A lone user line means the assistant half never made it to disk.
    if turns.len() % 2 == 1 {
        let dropped = turns.pop().expect("odd length is non-empty");
        if dropped.speaker != Speaker::User {
            return Err(corrupt(turns.len() + 1, "unpaired assistant turn".into()));
        }
        repaired = true;
        ends.pop();
        good_len = ends.last().copied().unwrap_or(0);
    }

    for (i, pair) in turns.chunks(2).enumerate() {
        if pair[0].speaker != Speaker::User || pair[1].speaker != Speaker::Assistant {
            return Err(corrupt(2 * i + 1, "turns are not user/assistant pairs".into()));
        }
    }
    let utterances = turns.iter().step_by(2).map(|t| t.text.as_str());
    let session = engine.replay(&id, utterances).map_err(|source| PersistError::Replay {
        path: path.display().to_string(),
        source,
    })?;
    if let Some(turn) = session
        .turn_log
        .iter()
        .zip(&turns)
        .find(|(a, b)| a != b)
        .map(|(a, _)| a.index)
    {
        return Err(PersistError::Replay {
            path: path.display().to_string(),
            source: EngineError::ReplayDiverged { turn },
        });
    }

    if repaired {
        let file = OpenOptions::new().write(true).open(path).map_err(io(path))?;
        file.set_len(good_len as u64).map_err(io(path))?;
        file.sync_all().map_err(io(path))?;
    }
    Ok(Recovered { session, repaired })
}
