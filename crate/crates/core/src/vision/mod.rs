//! Image analysis over 8-bit grayscale frames: bowl masking, food-level
//! estimation, background modelling and presence detection.
//!
//! Everything here is a pure function of its inputs. The only stateful
//! piece, [`BackgroundModel`], is a plain value that callers own.

mod background;
mod frame;
mod level;
mod mask;
mod pgm;
mod presence;

pub use background::{update_background, BackgroundModel, ForegroundMask};
pub use frame::Frame;
pub use level::{classify_food_level, food_level, FoodLevelReading, FoodStatus, LevelConfig};
pub use mask::{build_mask, BowlRegion, Mask, RowSpan};
pub use pgm::{decode_pgm, encode_pgm};
pub use presence::{detect_presence, presence_from_fraction, PresenceReading};

/// Intensity below which a masked pixel counts as food.
pub const DEFAULT_INTENSITY_THRESHOLD: u8 = 50;
/// Foreground fraction that must be exceeded to declare a pet present.
pub const DEFAULT_PRESENCE_THRESHOLD: f64 = 0.05;
pub const DEFAULT_BACKGROUND_ALPHA: f64 = 0.05;
pub const DEFAULT_DIFF_THRESHOLD: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VisionError {
    #[error("bowl region does not cover any pixel of a {width}x{height} frame")]
    EmptyMask { width: u32, height: u32 },
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
