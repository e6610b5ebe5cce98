//! Scalar abstraction shared by the vision and actuation math.

use std::fmt::Debug;

/// Floating point scalar the level, background and timing math is written
/// against. Implemented for `f32` and `f64`.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumCast + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or configuration value.
    fn lit(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("f64 always converts to a float scalar")
    }

    /// Conversion from a pixel count.
    fn count(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("pixel counts fit any float scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: num_traits::Float + num_traits::FromPrimitive + num_traits::NumCast + Debug + Default + Send + Sync + 'static
{
}
