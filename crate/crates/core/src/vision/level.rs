use serde::{Deserialize, Serialize};

use super::{Frame, Mask, VisionError, DEFAULT_INTENSITY_THRESHOLD};
use crate::clock::Millis;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FoodStatus {
    Low,
    Adequate,
}

/// Food is `Low` when the level falls strictly below `low_threshold`.
pub fn classify_food_level<S: Scalar>(percent: S, low_threshold: S) -> FoodStatus {
    if percent < low_threshold {
        FoodStatus::Low
    } else {
        FoodStatus::Adequate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelConfig<S> {
    pub intensity_threshold: u8,
    /// Percent below which the bowl is reported `Low`.
    pub low_threshold: S,
}

impl<S: Scalar> Default for LevelConfig<S> {
    fn default() -> Self {
        Self {
            intensity_threshold: DEFAULT_INTENSITY_THRESHOLD,
            low_threshold: S::lit(30.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoodLevelReading<S> {
    pub percent: S,
    pub dark_pixels: usize,
    pub total_pixels: usize,
    pub intensity_threshold: u8,
    pub status: FoodStatus,
    pub timestamp: Millis,
}

/// Share of in-bowl pixels darker than the intensity threshold, as a
/// percentage. The denominator is the clipped lattice count of the mask.
pub fn food_level<S: Scalar>(
    frame: &Frame,
    mask: &Mask,
    config: &LevelConfig<S>,
    timestamp: Millis,
) -> Result<FoodLevelReading<S>, VisionError> {
    if frame.dimensions() != mask.dimensions() {
        return Err(VisionError::DimensionMismatch {
            expected: mask.dimensions(),
            actual: frame.dimensions(),
        });
    }
    let pixels = frame.pixels();
    let threshold = config.intensity_threshold;
    let dark_pixels = mask.indices().filter(|&i| pixels[i] < threshold).count();
    let total_pixels = mask.count();
    let percent = S::count(100 * dark_pixels) / S::count(total_pixels);
    Ok(FoodLevelReading {
        percent,
        dark_pixels,
        total_pixels,
        intensity_threshold: threshold,
        status: classify_food_level(percent, config.low_threshold),
        timestamp,
    })
}
