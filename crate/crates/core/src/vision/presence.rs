use serde::{Deserialize, Serialize};

use super::ForegroundMask;
use crate::clock::Millis;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresenceReading<S> {
    pub foreground_fraction: S,
    pub detected: bool,
    pub timestamp: Millis,
}

/// Presence is declared when the fraction strictly exceeds the threshold.
pub fn presence_from_fraction<S: Scalar>(fraction: S, threshold: S, timestamp: Millis) -> PresenceReading<S> {
    PresenceReading {
        foreground_fraction: fraction,
        detected: fraction > threshold,
        timestamp,
    }
}

pub fn detect_presence<S: Scalar>(foreground: &ForegroundMask, threshold: S, timestamp: Millis) -> PresenceReading<S> {
    presence_from_fraction(foreground.fraction(), threshold, timestamp)
}
