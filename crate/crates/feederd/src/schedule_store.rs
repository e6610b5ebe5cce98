//! Versioned schedule persisted as one JSON file, replaced atomically.

use std::io::Write;
use std::path::{Path, PathBuf};

use feeder_core::control::Schedule;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VersionedSchedule {
    pub version: u64,
    #[serde(flatten)]
    pub schedule: Schedule,
}

#[derive(Debug, Clone)]
pub struct ScheduleStore {
    path: PathBuf,
}

impl ScheduleStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// The stored schedule, or `bootstrap` at version 0 when none exists.
    pub fn load(&self, bootstrap: &Schedule) -> anyhow::Result<VersionedSchedule> {
        match std::fs::read(&self.path) {
            Ok(bytes) => {
                let stored: VersionedSchedule = serde_json::from_slice(&bytes)?;
                stored.schedule.validate()?;
                Ok(stored)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(VersionedSchedule {
                version: 0,
                schedule: bootstrap.clone(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes to a sibling temp file, syncs it and renames it into place.
    pub fn save(&self, schedule: &VersionedSchedule) -> std::io::Result<()> {
        let dir = self.path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&serde_json::to_vec_pretty(schedule).expect("schedule serializes"))?;
        tmp.as_file().sync_all()?;
        tmp.persist(&self.path).map_err(|e| e.error)?;
        #[cfg(unix)]
        std::fs::File::open(dir)?.sync_all()?;
        Ok(())
    }
}
