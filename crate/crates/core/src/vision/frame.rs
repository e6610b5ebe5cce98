use super::VisionError;

/// Row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, VisionError> {
        if width == 0 || height == 0 {
            return Err(VisionError::InvalidFrame(format!(
                "dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(VisionError::InvalidFrame(format!(
                "{width}x{height} frame needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Uniform frame of the given intensity.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, VisionError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Converts interleaved RGB8 to luma with the 0.299/0.587/0.114 weights.
    pub fn from_rgb8(width: u32, height: u32, rgb: &[u8]) -> Result<Self, VisionError> {
        let expected = width as usize * height as usize * 3;
        if rgb.len() != expected {
            return Err(VisionError::InvalidFrame(format!(
                "{width}x{height} RGB frame needs {expected} bytes, got {}",
                rgb.len()
            )));
        }
        let pixels = rgb
            .chunks_exact(3)
            .map(|p| {
                let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                y.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    /// Intensity at `(x, y)`, `None` outside the frame.
    pub fn get(&self, x: u32, y: u32) -> Option<u8> {
        (x < self.width && y < self.height).then(|| self.pixels[self.index(x, y)])
    }

    /// Panics when `(x, y)` is outside the frame.
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) outside frame");
        let i = self.index(x, y);
        self.pixels[i] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_zero_dims() {
        assert!(Frame::new(2, 2, vec![0; 3]).is_err());
        assert!(Frame::new(0, 2, vec![]).is_err());
        assert!(Frame::new(2, 2, vec![0; 4]).is_ok());
    }

    #[test]
    fn luma_weights() {
        let f = Frame::from_rgb8(3, 1, &[255, 0, 0, 0, 255, 0, 10, 10, 10]).unwrap();
        assert_eq!(f.pixels(), &[76, 150, 10]);
    }

    #[test]
    fn get_set() {
        let mut f = Frame::filled(3, 2, 9).unwrap();
        f.set(2, 1, 1);
        assert_eq!(f.get(2, 1), Some(1));
        assert_eq!(f.pixels()[5], 1);
        assert_eq!(f.get(3, 0), None);
    }
}
