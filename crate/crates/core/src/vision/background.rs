use super::{Frame, VisionError};
use crate::num::Scalar;

/// Per-pixel boolean raster of pixels that differ from the background.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ForegroundMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
    count: usize,
}

impl ForegroundMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
            count: 0,
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, VisionError> {
        if width == 0 || height == 0 || bits.len() != width as usize * height as usize {
            return Err(VisionError::InvalidFrame(format!(
                "{width}x{height} foreground raster with {} entries",
                bits.len()
            )));
        }
        let count = bits.iter().filter(|&&b| b).count();
        Ok(Self {
            width,
            height,
            bits,
            count,
        })
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn fraction<S: Scalar>(&self) -> S {
        if self.bits.is_empty() {
            return S::zero();
        }
        S::count(self.count) / S::count(self.bits.len())
    }
}

/// Exponential running-mean background with an absolute-difference
/// foreground test.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel<S> {
    width: u32,
    height: u32,
    mean: Vec<S>,
    alpha: S,
    diff_threshold: S,
    initialized: bool,
}

impl<S: Scalar> BackgroundModel<S> {
    /// Uninitialized model; the first frame seeds it.
    pub fn new(alpha: S, diff_threshold: S) -> Result<Self, VisionError> {
        if !(alpha >= S::zero() && alpha <= S::one()) {
            return Err(VisionError::InvalidParameter(format!("alpha {alpha:?} outside [0, 1]")));
        }
        if !(diff_threshold >= S::zero()) || !diff_threshold.is_finite() {
            return Err(VisionError::InvalidParameter(format!(
                "difference threshold {diff_threshold:?} must be finite and non-negative"
            )));
        }
        Ok(Self {
            width: 0,
            height: 0,
            mean: Vec::new(),
            alpha,
            diff_threshold,
            initialized: false,
        })
    }

    /// Model already holding `background` as its estimate.
    pub fn seeded(background: &Frame, alpha: S, diff_threshold: S) -> Result<Self, VisionError> {
        let mut model = Self::new(alpha, diff_threshold)?;
        model.seed(background);
        Ok(model)
    }

    fn seed(&mut self, frame: &Frame) {
        self.width = frame.width();
        self.height = frame.height();
        self.mean = frame.pixels().iter().map(|&p| S::count(p as usize)).collect();
        self.initialized = true;
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn diff_threshold(&self) -> S {
        self.diff_threshold
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    pub fn dimensions(&self) -> Option<(u32, u32)> {
        self.initialized.then_some((self.width, self.height))
    }

    /// Classifies `frame` against the current estimate, then blends it in.
    /// The first frame seeds the model and reports no foreground.
    pub fn update(&mut self, frame: &Frame) -> Result<ForegroundMask, VisionError> {
        if !self.initialized {
            self.seed(frame);
            return Ok(ForegroundMask::empty(frame.width(), frame.height()));
        }
        if frame.dimensions() != (self.width, self.height) {
            return Err(VisionError::DimensionMismatch {
                expected: (self.width, self.height),
                actual: frame.dimensions(),
            });
        }
        let keep = S::one() - self.alpha;
        let hi = S::lit(255.0);
        let mut count = 0;
        let bits = self
            .mean
            .iter_mut()
            .zip(frame.pixels())
            .map(|(m, &p)| {
                let value = S::count(p as usize);
                let fg = (value - *m).abs() > self.diff_threshold;
                count += fg as usize;
                *m = (keep * *m + self.alpha * value).max(S::zero()).min(hi);
                fg
            })
            .collect();
        Ok(ForegroundMask {
            width: self.width,
            height: self.height,
            bits,
            count,
        })
    }
}

/// Value-returning form of [`BackgroundModel::update`].
pub fn update_background<S: Scalar>(
    model: &BackgroundModel<S>,
    frame: &Frame,
) -> Result<(BackgroundModel<S>, ForegroundMask), VisionError> {
    let mut next = model.clone();
    let fg = next.update(frame)?;
    Ok((next, fg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_frame_seeds() {
        let model = BackgroundModel::<f64>::new(0.05, 25.0).unwrap();
        let frame = Frame::new(2, 1, vec![3, 250]).unwrap();
        let (model, fg) = update_background(&model, &frame).unwrap();
        assert_eq!(fg.count(), 0);
        assert_eq!(fg.fraction::<f64>(), 0.0);
        assert_eq!(model.mean(), &[3.0, 250.0]);
        assert!(model.is_initialized());
    }

    #[test]
    fn zero_alpha_freezes_mean() {
        let frame = Frame::filled(4, 4, 120).unwrap();
        let mut model = BackgroundModel::<f64>::seeded(&frame, 0.0, 25.0).unwrap();
        for _ in 0..5 {
            assert_eq!(model.update(&frame).unwrap().count(), 0);
        }
        assert!(model.mean().iter().all(|&m| m == 120.0));
    }

    #[test]
    fn block_intrusion_counts_exactly() {
        let scene = Frame::filled(100, 100, 200).unwrap();
        let mut model = BackgroundModel::<f64>::new(0.05, 25.0).unwrap();
        for _ in 0..10 {
            model.update(&scene).unwrap();
        }
        let mut intruded = scene.clone();
        for y in 10..40 {
            for x in 60..90 {
                intruded.set(x, y, 20);
            }
        }
        let fg = model.update(&intruded).unwrap();
        assert_eq!(fg.count(), 900);
        assert_eq!(fg.fraction::<f64>(), 0.09);
    }

    #[test]
    fn threshold_is_strict() {
        let scene = Frame::filled(1, 1, 100).unwrap();
        let mut model = BackgroundModel::<f32>::seeded(&scene, 0.5, 25.0).unwrap();
        assert_eq!(model.update(&Frame::filled(1, 1, 125).unwrap()).unwrap().count(), 0);
        let mut model = BackgroundModel::<f32>::seeded(&scene, 0.5, 25.0).unwrap();
        assert_eq!(model.update(&Frame::filled(1, 1, 126).unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn size_change_rejected() {
        let mut model = BackgroundModel::<f64>::new(0.05, 25.0).unwrap();
        model.update(&Frame::filled(4, 4, 0).unwrap()).unwrap();
        assert!(matches!(
            model.update(&Frame::filled(4, 5, 0).unwrap()),
            Err(VisionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parameter_validation() {
        assert!(BackgroundModel::<f64>::new(1.5, 25.0).is_err());
        assert!(BackgroundModel::<f64>::new(f64::NAN, 25.0).is_err());
        assert!(BackgroundModel::<f64>::new(0.1, -1.0).is_err());
    }
}
