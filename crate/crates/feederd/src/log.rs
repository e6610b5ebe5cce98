//! Append-only JSON-lines event log. One event per line, written straight
//! to the file with no user-space buffering.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use feeder_core::event::{EventDraft, FeederEvent};
use tokio::sync::watch;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("event log io: {0}")]
    Io(#[from] std::io::Error),
    #[error("event log line {line} is corrupt: {reason}")]
    Corrupt { line: usize, reason: String },
}

/// Outcome of reading an existing log at open.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recovery {
    pub events: usize,
    /// Bytes of a torn trailing line that were cut off.
    pub discarded_bytes: usize,
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: Mutex<File>,
    events: RwLock<Vec<FeederEvent>>,
    last_seq: watch::Sender<u64>,
}

impl EventLog {
    /// Opens (or creates) the log and replays it. A partial final line left
    /// by a crash is truncated away; any other unreadable line is an error.
    pub fn open(path: impl Into<PathBuf>) -> Result<(Self, Recovery), LogError> {
        let path = path.into();
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let mut events: Vec<FeederEvent> = Vec::new();
        let mut good_len = 0usize;
        let mut rest = &bytes[..];
        let mut line_no = 0usize;
        while !rest.is_empty() {
            line_no += 1;
            let (line, terminated) = match rest.iter().position(|&b| b == b'\n') {
                Some(i) => (&rest[..i], true),
                None => (rest, false),
            };
            let consumed = line.len() + usize::from(terminated);
            if terminated && line.iter().all(u8::is_ascii_whitespace) {
                good_len += consumed;
                rest = &rest[consumed..];
                continue;
            }
            match serde_json::from_slice::<FeederEvent>(line) {
                Ok(ev) => {
                    let expected = events.last().map_or(1, |e| e.seq + 1);
                    if ev.seq != expected {
                        return Err(LogError::Corrupt {
                            line: line_no,
                            reason: format!("seq {} where {expected} was expected", ev.seq),
                        });
                    }
                    events.push(ev);
                }
                Err(_) if !terminated => break,
                Err(e) => {
                    return Err(LogError::Corrupt {
                        line: line_no,
                        reason: e.to_string(),
                    })
                }
            }
            good_len += consumed;
            rest = &rest[consumed..];
            if !terminated {
                // complete event that lost only its newline
                file.write_all(b"\n")?;
                good_len += 1;
            }
        }

        let discarded_bytes = bytes.len().saturating_sub(good_len);
        if discarded_bytes > 0 {
            file.set_len(good_len as u64)?;
        }
        file.seek(SeekFrom::End(0))?;
        let recovery = Recovery {
            events: events.len(),
            discarded_bytes,
        };
        let last = events.last().map_or(0, |e| e.seq);
        let (last_seq, _) = watch::channel(last);
        Ok((
            Self {
                path,
                file: Mutex::new(file),
                events: RwLock::new(events),
                last_seq,
            },
            recovery,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Assigns the next sequence numbers and writes the drafts, one line
    /// each. Returns the committed events.
    pub fn append(&self, drafts: Vec<EventDraft>) -> Result<Vec<FeederEvent>, LogError> {
        if drafts.is_empty() {
            return Ok(Vec::new());
        }
        let mut file = self.file.lock().expect("log file lock");
        let first = self.last_seq() + 1;
        let mut committed = Vec::with_capacity(drafts.len());
        for (seq, draft) in (first..).zip(drafts) {
            let ev = draft.commit(seq);
            let mut line = serde_json::to_vec(&ev).expect("events serialize");
            line.push(b'\n');
            file.write_all(&line)?;
            committed.push(ev);
        }
        file.flush()?;
        let last = committed.last().map(|e| e.seq).unwrap_or_default();
        self.events.write().expect("log events lock").extend(committed.iter().cloned());
        self.last_seq.send_replace(last);
        Ok(committed)
    }

    pub fn append_one(&self, draft: EventDraft) -> Result<FeederEvent, LogError> {
        Ok(self.append(vec![draft])?.remove(0))
    }

    pub fn last_seq(&self) -> u64 {
        *self.last_seq.borrow()
    }

    pub fn len(&self) -> usize {
        self.events.read().expect("log events lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Up to `limit` events with `seq > since`, oldest first.
    pub fn since(&self, since: u64, limit: usize) -> Vec<FeederEvent> {
        let events = self.events.read().expect("log events lock");
        // seq n lives at index n - 1
        let start = (since as usize).min(events.len());
        events[start..].iter().take(limit).cloned().collect()
    }

    /// Runs `f` over every event without copying the log.
    pub fn scan<T>(&self, f: impl FnOnce(&[FeederEvent]) -> T) -> T {
        f(&self.events.read().expect("log events lock"))
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.last_seq.subscribe()
    }
}

/// Reads a log file without opening it for writing.
pub fn read_log(path: &Path) -> Result<Vec<FeederEvent>, LogError> {
    let text = std::fs::read_to_string(path)?;
    let total = text.lines().count();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(ev) => out.push(ev),
            Err(_) if i + 1 == total && !text.ends_with('\n') => break,
            Err(e) => {
                return Err(LogError::Corrupt {
                    line: i + 1,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}
