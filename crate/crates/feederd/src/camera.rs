//! Frame source that reads the newest PGM dropped into a directory.

use std::path::{Path, PathBuf};
use std::time::SystemTime;

use feeder_core::clock::Millis;
use feeder_core::control::{CaptureError, Captured, FrameSource};
use feeder_core::vision::decode_pgm;

#[derive(Debug, Clone)]
pub struct DirCamera {
    dir: PathBuf,
}

impl DirCamera {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn newest(&self) -> Result<PathBuf, CaptureError> {
        let entries = std::fs::read_dir(&self.dir)
            .map_err(|e| CaptureError::Unavailable(format!("{}: {e}", self.dir.display())))?;
        let mut best: Option<(SystemTime, PathBuf)> = None;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_none_or(|x| !x.eq_ignore_ascii_case("pgm")) {
                continue;
            }
            let Ok(modified) = entry.metadata().and_then(|m| m.modified()) else {
                continue;
            };
            // ties go to the later name
            if best.as_ref().is_none_or(|(t, p)| (modified, &path) > (*t, p)) {
                best = Some((modified, path));
            }
        }
        best.map(|(_, p)| p)
            .ok_or_else(|| CaptureError::Unavailable(format!("no .pgm frames in {}", self.dir.display())))
    }
}

impl FrameSource for DirCamera {
    fn capture(&mut self, _now: Millis) -> Result<Captured, CaptureError> {
        let path = self.newest()?;
        let bytes = std::fs::read(&path).map_err(|e| CaptureError::Unavailable(format!("{}: {e}", path.display())))?;
        let frame = decode_pgm(&bytes).map_err(|e| CaptureError::Unavailable(format!("{}: {e}", path.display())))?;
        Ok(Captured::with_encoded(frame, bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use feeder_core::vision::{encode_pgm, Frame};

    #[test]
    fn reads_newest_frame_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let mut cam = DirCamera::new(dir.path());
        assert!(cam.capture(0).is_err());
        let bytes = encode_pgm(&Frame::filled(4, 3, 9).unwrap());
        std::fs::write(dir.path().join("a.pgm"), &bytes).unwrap();
        std::fs::write(dir.path().join("notes.txt"), b"x").unwrap();
        let got = cam.capture(0).unwrap();
        assert_eq!(got.frame.dimensions(), (4, 3));
        assert_eq!(got.into_pgm(), bytes);
        std::fs::write(dir.path().join("a.pgm"), b"P5 broken").unwrap();
        assert!(matches!(cam.capture(0), Err(CaptureError::Unavailable(_))));
    }
}
