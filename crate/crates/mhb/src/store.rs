//! Durable, transactional storage of one [`State`].
//!
//! Readers take an `Arc<State>` snapshot and never block writers for longer
//! than a pointer swap. Writers are serialized: each mutation is applied to a
//! private copy of the current state, appended to the write-ahead log and
//! fsynced, and only then published. On open, the last snapshot file is
//! loaded and the log replayed; a torn or corrupt tail is cut off, so a crash
//! at any point leaves either the old or the new state.
//!
//! Files in the data directory:
//!
//! - `LOCK` — held exclusively while a process has the store open
//! - `snapshot.json` — full state as of its `revision`
//! - `wal.log` — one line per committed mutation after the snapshot:
//!   `<16 hex digits of sha256(json)> <json>\n`

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use mhb_core::{Actor, Applied, Mutation, State, Timestamp};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ServiceError};

/// Abstract store used by the API and the CLI.
pub trait Store: Send + Sync {
    /// A consistent, immutable view of the current state.
    fn snapshot(&self) -> Arc<State>;

    /// Authorize and apply one mutation atomically and durably.
    fn apply(&self, actor: Actor, mutation: Mutation, now: Timestamp) -> Result<Applied>;

    /// Load a complete state into a store that has never held data.
    fn import(&self, state: State) -> Result<()>;

    /// Fold the log into a fresh snapshot.
    fn flush(&self) -> Result<()>;
}

/// Where a simulated crash stops a commit. Test-only instrumentation; a
/// crashed store refuses further writes and must be reopened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// Nothing of the commit reached the disk.
    BeforeAppend,
    /// Part of the log line reached the disk.
    TornAppend,
    /// The log line is durable but the new state was never published.
    AfterAppend,
    /// Compaction wrote part of the temporary snapshot.
    DuringCompaction,
    /// The new snapshot is in place but the log still holds its records.
    AfterSnapshotRename,
}

impl CrashPoint {
    pub const ALL: [CrashPoint; 5] = [
        CrashPoint::BeforeAppend,
        CrashPoint::TornAppend,
        CrashPoint::AfterAppend,
        CrashPoint::DuringCompaction,
        CrashPoint::AfterSnapshotRename,
    ];

    /// Whether the interrupted mutation survives recovery.
    pub fn is_durable(self) -> bool {
        !matches!(self, CrashPoint::BeforeAppend | CrashPoint::TornAppend)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    revision: u64,
    actor: Actor,
    at: Timestamp,
    mutation: Mutation,
}

const SNAPSHOT: &str = "snapshot.json";
const WAL: &str = "wal.log";
const LOCK: &str = "LOCK";
const DEFAULT_COMPACT_EVERY: usize = 1000;

fn checksum(json: &[u8]) -> String {
    hex::encode(&Sha256::digest(json)[..8])
}

fn encode_line(rec: &Record) -> Vec<u8> {
    let json = serde_json::to_vec(rec).expect("records serialize");
    let mut line = checksum(&json).into_bytes();
    line.push(b' ');
    line.extend_from_slice(&json);
    line.push(b'\n');
    line
}

fn decode_line(line: &[u8]) -> Option<Record> {
    if line.len() < 18 || line[16] != b' ' {
        return None;
    }
    let (sum, json) = (&line[..16], &line[17..]);
    if sum != checksum(json).as_bytes() {
        return None;
    }
    serde_json::from_slice(json).ok()
}

fn sync_dir(dir: &Path) -> std::io::Result<()> {
    File::open(dir)?.sync_all()
}

struct Journal {
    dir: PathBuf,
    wal: File,
    pending: usize,
    compact_every: usize,
    _lock: File,
}

impl Journal {
    fn append(&mut self, rec: &Record, crash: Option<CrashPoint>) -> Result<()> {
        let line = encode_line(rec);
        match crash {
            Some(CrashPoint::BeforeAppend) => return Err(ServiceError::Crashed(CrashPoint::BeforeAppend)),
            Some(CrashPoint::TornAppend) => {
                self.wal.write_all(&line[..line.len() / 2])?;
                self.wal.sync_data()?;
                return Err(ServiceError::Crashed(CrashPoint::TornAppend));
            }
            _ => {}
        }
        self.wal.write_all(&line)?;
        self.wal.sync_data()?;
        self.pending += 1;
        if crash == Some(CrashPoint::AfterAppend) {
            return Err(ServiceError::Crashed(CrashPoint::AfterAppend));
        }
        Ok(())
    }

    fn compact(&mut self, state: &State, crash: Option<CrashPoint>) -> Result<()> {
        let bytes = serde_json::to_vec(state).expect("state serializes");
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        let mut f = File::create(&tmp)?;
        if crash == Some(CrashPoint::DuringCompaction) {
            f.write_all(&bytes[..bytes.len() / 2])?;
            f.sync_all()?;
            return Err(ServiceError::Crashed(CrashPoint::DuringCompaction));
        }
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT))?;
        sync_dir(&self.dir)?;
        if crash == Some(CrashPoint::AfterSnapshotRename) {
            return Err(ServiceError::Crashed(CrashPoint::AfterSnapshotRename));
        }
        self.wal.set_len(0)?;
        self.wal.seek(SeekFrom::Start(0))?;
        self.wal.sync_all()?;
        self.pending = 0;
        Ok(())
    }
}

struct Writer {
    journal: Option<Journal>,
    crash: Option<CrashPoint>,
    crashed: bool,
}

pub struct LocalStore {
    current: RwLock<Arc<State>>,
    writer: Mutex<Writer>,
}

/// What [`LocalStore::open`] found on disk.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recovery {
    pub snapshot_revision: u64,
    pub replayed: usize,
    /// Bytes cut from the end of the log (torn or corrupt tail).
    pub truncated_bytes: u64,
}

impl LocalStore {
    /// A store without persistence.
    pub fn in_memory() -> Self {
        Self::with_state(State::new(), None)
    }

    fn with_state(state: State, journal: Option<Journal>) -> Self {
        LocalStore {
            current: RwLock::new(Arc::new(state)),
            writer: Mutex::new(Writer {
                journal,
                crash: None,
                crashed: false,
            }),
        }
    }

    pub fn open(dir: &Path) -> Result<Self> {
        Self::open_with_report(dir).map(|(s, _)| s)
    }

    /// Open (creating if needed) the store in `dir`, recovering from any
    /// interrupted commit or compaction.
    pub fn open_with_report(dir: &Path) -> Result<(Self, Recovery)> {
        fs::create_dir_all(dir)?;
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(LOCK))?;
        if lock.try_lock().is_err() {
            return Err(ServiceError::StoreLocked(dir.to_path_buf()));
        }

        let _ = fs::remove_file(dir.join(format!("{SNAPSHOT}.tmp")));
        let mut state = match fs::read(dir.join(SNAPSHOT)) {
            Ok(bytes) => serde_json::from_slice::<State>(&bytes)
                .map_err(|e| ServiceError::Corrupt(format!("{SNAPSHOT}: {e}")))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => State::new(),
            Err(e) => return Err(e.into()),
        };
        let mut report = Recovery {
            snapshot_revision: state.revision(),
            ..Recovery::default()
        };

        let mut wal = OpenOptions::new().create(true).truncate(false).read(true).write(true).open(dir.join(WAL))?;
        let mut bytes = Vec::new();
        wal.read_to_end(&mut bytes)?;
        let mut good = 0usize;
        let mut pending = 0usize;
        while let Some(nl) = bytes[good..].iter().position(|b| *b == b'\n') {
            let Some(rec) = decode_line(&bytes[good..good + nl]) else { break };
            if rec.revision > state.revision() {
                if rec.revision != state.revision() + 1 {
                    return Err(ServiceError::Corrupt(format!(
                        "{WAL}: record for revision {} follows revision {}",
                        rec.revision,
                        state.revision()
                    )));
                }
                state.apply(rec.actor, rec.mutation, rec.at).map_err(|e| {
                    ServiceError::Corrupt(format!("{WAL}: revision {} does not replay: {e}", rec.revision))
                })?;
                report.replayed += 1;
            }
            pending += 1;
            good += nl + 1;
        }
        if good < bytes.len() {
            report.truncated_bytes = (bytes.len() - good) as u64;
            wal.set_len(good as u64)?;
            wal.sync_all()?;
        }
        wal.seek(SeekFrom::End(0))?;
        sync_dir(dir)?;

        let journal = Journal {
            dir: dir.to_path_buf(),
            wal,
            pending,
            compact_every: DEFAULT_COMPACT_EVERY,
            _lock: lock,
        };
        Ok((Self::with_state(state, Some(journal)), report))
    }

    /// Compact after this many log records (default 1000).
    pub fn set_compact_every(&self, n: usize) {
        if let Some(j) = self.writer.lock().expect("writer lock").journal.as_mut() {
            j.compact_every = n.max(1);
        }
    }

    /// Make the next commit stop at `point`, as if the process died there.
    pub fn inject_crash(&self, point: CrashPoint) {
        self.writer.lock().expect("writer lock").crash = Some(point);
    }

    fn publish(&self, state: State) {
        *self.current.write().expect("state lock") = Arc::new(state);
    }
}

impl Store for LocalStore {
    fn snapshot(&self) -> Arc<State> {
        self.current.read().expect("state lock").clone()
    }

    fn apply(&self, actor: Actor, mutation: Mutation, now: Timestamp) -> Result<Applied> {
        let mut w = self.writer.lock().expect("writer lock");
        if w.crashed {
            return Err(ServiceError::Corrupt("store crashed; reopen it".into()));
        }
        let mut next = (*self.snapshot()).clone();
        let applied = next.apply(actor, mutation.clone(), now)?;
        let crash = w.crash.take();
        let Some(j) = w.journal.as_mut() else {
            self.publish(next);
            return Ok(applied);
        };
        let rec = Record {
            revision: applied.revision,
            actor,
            at: now,
            mutation,
        };
        if let Err(e) = j.append(&rec, crash) {
            // Before the line is durable the old state stays in force.
            if matches!(e, ServiceError::Crashed(_)) {
                w.crashed = true;
            }
            return Err(e);
        }
        let compact_crash =
            crash.filter(|c| matches!(c, CrashPoint::DuringCompaction | CrashPoint::AfterSnapshotRename));
        let compact = if j.pending >= j.compact_every || compact_crash.is_some() {
            j.compact(&next, compact_crash)
        } else {
            Ok(())
        };
        match compact {
            Err(e @ ServiceError::Crashed(_)) => {
                w.crashed = true;
                return Err(e);
            }
            // The commit is durable in the log; compaction retries later.
            Err(e) => tracing::warn!("snapshot compaction failed: {e}"),
            Ok(()) => {}
        }
        self.publish(next);
        Ok(applied)
    }

    fn import(&self, state: State) -> Result<()> {
        let mut w = self.writer.lock().expect("writer lock");
        let cur = self.snapshot();
        if cur.revision() != 0 || !cur.is_empty() {
            return Err(ServiceError::StoreNotEmpty);
        }
        if let Some(j) = w.journal.as_mut() {
            j.compact(&state, None)?;
        }
        self.publish(state);
        Ok(())
    }

    fn flush(&self) -> Result<()> {
        let mut w = self.writer.lock().expect("writer lock");
        if w.crashed {
            return Ok(());
        }
        let cur = self.snapshot();
        match w.journal.as_mut() {
            Some(j) if j.pending > 0 => j.compact(&cur, None),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_codec() {
        let rec = Record {
            revision: 3,
            actor: Actor::System,
            at: Timestamp(5),
            mutation: Mutation::BootstrapAdmin {
                login_name: "a".into(),
                display_name: "A".into(),
            },
        };
        let line = encode_line(&rec);
        let back = decode_line(&line[..line.len() - 1]).unwrap();
        assert_eq!(back.revision, 3);
        let mut bad = line.clone();
        bad[20] ^= 1;
        assert!(decode_line(&bad[..bad.len() - 1]).is_none());
    }

    #[test]
    fn second_open_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let _a = LocalStore::open(dir.path()).unwrap();
        assert!(matches!(LocalStore::open(dir.path()), Err(ServiceError::StoreLocked(_))));
    }
}
