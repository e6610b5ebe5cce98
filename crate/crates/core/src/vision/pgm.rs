//! Binary PGM (`P5`) with at most 8 bits per sample.

use super::{Frame, VisionError};

fn malformed(msg: impl Into<String>) -> VisionError {
    VisionError::MalformedImage(msg.into())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, VisionError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(malformed(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Frame, VisionError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(malformed("expected P5 magic"));
    }
    let mut header = Header { bytes, pos: 2 };
    if !header.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(malformed("expected whitespace after magic"));
    }
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(malformed(format!("maxval {maxval} not in 1..=255")));
    }
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(malformed("missing separator before raster")),
    }
    let start = header.pos + 1;
    let needed = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| malformed("dimensions overflow"))?;
    let payload = &bytes[start..];
    if payload.len() < needed {
        return Err(malformed(format!(
            "truncated raster: {needed} bytes expected, {} present",
            payload.len()
        )));
    }
    Frame::new(width, height, payload[..needed].to_vec())
}

/// Encodes with maxval 255 and a minimal `P5\n<w> <h>\n255\n` header.
pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", frame.width(), frame.height());
    let mut out = Vec::with_capacity(header.len() + frame.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(frame.pixels());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_small_frame() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 7]);
        let f = decode_pgm(&bytes).unwrap();
        assert_eq!(f, Frame::new(2, 2, vec![0, 255, 128, 7]).unwrap());
    }

    #[test]
    fn header_comments() {
        let mut bytes = b"P5\n# camera 0\n3 # w\n1\n200\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[1, 2, 3]);
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = b"P6 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0; 12]);
        assert!(matches!(decode_pgm(&bytes), Err(VisionError::MalformedImage(_))));
        assert!(decode_pgm(b"").is_err());
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = b"P5 4 4 255\n".to_vec();
        bytes.extend_from_slice(&[9; 15]);
        assert!(matches!(decode_pgm(&bytes), Err(VisionError::MalformedImage(_))));
    }

    #[test]
    fn sixteen_bit_rejected() {
        let mut bytes = b"P5 1 1 65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0]);
        assert!(decode_pgm(&bytes).is_err());
    }

    #[test]
    fn encode_then_decode() {
        let f = Frame::new(3, 2, vec![0, 1, 2, 253, 254, 255]).unwrap();
        let bytes = encode_pgm(&f);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(decode_pgm(&bytes).unwrap(), f);
    }
}
