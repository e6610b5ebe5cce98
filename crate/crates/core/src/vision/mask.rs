use serde::{Deserialize, Serialize};

use super::VisionError;

/// Calibrated circular bowl location in pixel coordinates. The centre may
/// lie outside the frame as long as part of the disc is visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BowlRegion {
    pub cx: i64,
    pub cy: i64,
    #[serde(rename = "r", alias = "radius")]
    pub radius: u32,
}

impl BowlRegion {
    pub fn new(cx: i64, cy: i64, radius: u32) -> Self {
        Self { cx, cy, radius }
    }

    /// Disc predicate `(x - cx)^2 + (y - cy)^2 <= r^2`.
    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        let dx = (x - self.cx) as i128;
        let dy = (y - self.cy) as i128;
        let r = self.radius as i128;
        dx * dx + dy * dy <= r * r
    }
}

/// Inclusive run `[x_start, x_end]` of in-bowl pixels on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowSpan {
    pub y: u32,
    pub x_start: u32,
    pub x_end: u32,
}

impl RowSpan {
    pub fn len(&self) -> usize {
        (self.x_end - self.x_start) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// The lattice points of a frame that fall inside a [`BowlRegion`],
/// stored as one span per covered row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    region: BowlRegion,
    width: u32,
    height: u32,
    spans: Vec<RowSpan>,
    count: usize,
}

impl Mask {
    pub fn region(&self) -> BowlRegion {
        self.region
    }

    /// Frame dimensions the mask was built for.
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Number of in-bowl pixels. Always at least one.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spans(&self) -> &[RowSpan] {
        &self.spans
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.region.contains(x as i64, y as i64)
    }

    /// In-bowl points in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.spans
            .iter()
            .flat_map(|s| (s.x_start..=s.x_end).map(move |x| (x, s.y)))
    }

    /// Row-major pixel indices of the in-bowl points.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        let w = self.width as usize;
        self.spans.iter().flat_map(move |s| {
            let row = s.y as usize * w;
            (row + s.x_start as usize)..=(row + s.x_end as usize)
        })
    }
}

fn isqrt(n: u64) -> u64 {
    let mut s = (n as f64).sqrt() as u64;
    while s.checked_mul(s).is_none_or(|sq| sq > n) {
        s -= 1;
    }
    while (s + 1).checked_mul(s + 1).is_some_and(|sq| sq <= n) {
        s += 1;
    }
    s
}

/// Builds the clipped disc mask for a `frame_width` x `frame_height` frame.
pub fn build_mask(frame_width: u32, frame_height: u32, region: BowlRegion) -> Result<Mask, VisionError> {
    let empty = VisionError::EmptyMask {
        width: frame_width,
        height: frame_height,
    };
    if frame_width == 0 || frame_height == 0 {
        return Err(empty);
    }
    let r = region.radius as i64;
    let y_lo = (region.cy - r).max(0);
    let y_hi = (region.cy + r).min(frame_height as i64 - 1);
    let r2 = (region.radius as u64) * (region.radius as u64);

    let mut spans = Vec::new();
    let mut count = 0usize;
    for y in y_lo..=y_hi {
        let dy = (y - region.cy).unsigned_abs();
        let half = isqrt(r2 - dy * dy) as i64;
        let x_start = (region.cx - half).max(0);
        let x_end = (region.cx + half).min(frame_width as i64 - 1);
        if x_start > x_end {
            continue;
        }
        let span = RowSpan {
            y: y as u32,
            x_start: x_start as u32,
            x_end: x_end as u32,
        };
        count += span.len();
        spans.push(span);
    }
    if count == 0 {
        return Err(empty);
    }
    Ok(Mask {
        region,
        width: frame_width,
        height: frame_height,
        spans,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_radius_is_the_centre() {
        let m = build_mask(4, 4, BowlRegion::new(1, 1, 0)).unwrap();
        assert_eq!(m.count(), 1);
        assert_eq!(m.points().collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn off_frame_disc_is_empty() {
        assert_eq!(
            build_mask(10, 10, BowlRegion::new(50, 50, 3)),
            Err(VisionError::EmptyMask { width: 10, height: 10 })
        );
        // Row range overlaps but the columns miss.
        assert!(build_mask(10, 10, BowlRegion::new(-5, 5, 4)).is_err());
    }

    #[test]
    fn radius_ten_matches_gauss_count() {
        assert_eq!(build_mask(100, 100, BowlRegion::new(50, 50, 10)).unwrap().count(), 317);
    }

    #[test]
    fn clipped_to_corner() {
        // Quarter disc of radius 2 at the origin: 1 + 2 + 2 + ... enumerate.
        let m = build_mask(10, 10, BowlRegion::new(0, 0, 2)).unwrap();
        let pts: Vec<_> = m.points().collect();
        assert_eq!(pts, vec![(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)]);
        assert!(m.points().all(|(x, y)| m.contains(x, y)));
    }

    #[test]
    fn isqrt_exact() {
        for n in 0..10_000u64 {
            let s = isqrt(n);
            assert!(s * s <= n && (s + 1) * (s + 1) > n);
        }
        assert_eq!(isqrt(u64::MAX), u32::MAX as u64);
    }

    #[test]
    fn region_json_uses_r() {
        let r: BowlRegion = serde_json::from_str(r#"{"cx": 3, "cy": -2, "r": 7}"#).unwrap();
        assert_eq!(r, BowlRegion::new(3, -2, 7));
    }
}
