use serde::{Deserialize, Serialize};

use crate::clock::{secs_to_ms, Millis};
use crate::vision::{
    DEFAULT_BACKGROUND_ALPHA, DEFAULT_DIFF_THRESHOLD, DEFAULT_INTENSITY_THRESHOLD, DEFAULT_PRESENCE_THRESHOLD,
};
use crate::LevelConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid controller config: {0}")]
pub struct ConfigError(pub String);

fn d_low() -> f64 {
    30.0
}
fn d_refill() -> f64 {
    20.0
}
fn d_teaser() -> f64 {
    5.0
}
fn d_meal() -> f64 {
    40.0
}
fn d_window() -> f64 {
    10.0
}
fn d_cooldown() -> f64 {
    1800.0
}
fn d_presence() -> f64 {
    DEFAULT_PRESENCE_THRESHOLD
}
fn d_intensity() -> u8 {
    DEFAULT_INTENSITY_THRESHOLD
}
fn d_alpha() -> f64 {
    DEFAULT_BACKGROUND_ALPHA
}
fn d_diff() -> f64 {
    DEFAULT_DIFF_THRESHOLD
}
fn d_low_water() -> f64 {
    100.0
}

/// Controller tunables. Quantities are grams for food and millilitres for
/// water; times are seconds. The dispensing rates have no default and must
/// come from calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Food percent below which the bowl counts as low.
    #[serde(default = "d_low")]
    pub low_level_threshold: f64,
    #[serde(default = "d_refill")]
    pub refill_quantity: f64,
    #[serde(default = "d_teaser")]
    pub teaser_quantity: f64,
    /// Total served per visit, teaser included.
    #[serde(default = "d_meal")]
    pub meal_quantity: f64,
    #[serde(default = "d_window")]
    pub engagement_window_s: f64,
    #[serde(default = "d_cooldown")]
    pub cooldown_s: f64,
    #[serde(default = "d_presence")]
    pub presence_threshold: f64,
    #[serde(default = "d_intensity")]
    pub intensity_threshold: u8,
    #[serde(default = "d_alpha")]
    pub background_alpha: f64,
    #[serde(default = "d_diff")]
    pub diff_threshold: f64,
    /// Grams per second of open food gate.
    pub food_rate: f64,
    /// Millilitres per second of running pump.
    pub water_rate: f64,
    /// Reservoir size for water bookkeeping; `None` disables LowWater alerts.
    #[serde(default)]
    pub water_reservoir_ml: Option<f64>,
    #[serde(default = "d_low_water")]
    pub low_water_ml: f64,
    /// Offset of local time from UTC, for schedule times of day.
    #[serde(default)]
    pub utc_offset_s: i64,
}

impl ControllerConfig {
    pub fn new(food_rate: f64, water_rate: f64) -> Self {
        Self {
            low_level_threshold: d_low(),
            refill_quantity: d_refill(),
            teaser_quantity: d_teaser(),
            meal_quantity: d_meal(),
            engagement_window_s: d_window(),
            cooldown_s: d_cooldown(),
            presence_threshold: d_presence(),
            intensity_threshold: d_intensity(),
            background_alpha: d_alpha(),
            diff_threshold: d_diff(),
            food_rate,
            water_rate,
            water_reservoir_ml: None,
            low_water_ml: d_low_water(),
            utc_offset_s: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        let non_neg = [
            ("refill_quantity", self.refill_quantity),
            ("teaser_quantity", self.teaser_quantity),
            ("meal_quantity", self.meal_quantity),
            ("low_water_ml", self.low_water_ml),
        ];
        for (name, v) in non_neg {
            if !(v.is_finite() && v >= 0.0) {
                return err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.teaser_quantity >= self.meal_quantity {
            return err(format!(
                "teaser_quantity {} must be below meal_quantity {}",
                self.teaser_quantity, self.meal_quantity
            ));
        }
        let positive = [
            ("engagement_window_s", self.engagement_window_s),
            ("cooldown_s", self.cooldown_s),
            ("food_rate", self.food_rate),
            ("water_rate", self.water_rate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..=100.0).contains(&self.low_level_threshold) {
            return err(format!("low_level_threshold {} outside [0, 100]", self.low_level_threshold));
        }
        if !(0.0..=1.0).contains(&self.presence_threshold) {
            return err(format!("presence_threshold {} outside [0, 1]", self.presence_threshold));
        }
        if !(0.0..=1.0).contains(&self.background_alpha) {
            return err(format!("background_alpha {} outside [0, 1]", self.background_alpha));
        }
        if !(self.diff_threshold.is_finite() && self.diff_threshold >= 0.0) {
            return err(format!("diff_threshold {} must be non-negative", self.diff_threshold));
        }
        if let Some(cap) = self.water_reservoir_ml {
            if !(cap.is_finite() && cap > 0.0) {
                return err(format!("water_reservoir_ml {cap} must be positive"));
            }
        }
        Ok(())
    }

    pub fn level_config(&self) -> LevelConfig {
        LevelConfig {
            intensity_threshold: self.intensity_threshold,
            low_threshold: self.low_level_threshold,
        }
    }

    pub fn rate(&self, target: crate::actuation::Target) -> f64 {
        match target {
            crate::actuation::Target::Food => self.food_rate,
            crate::actuation::Target::Water => self.water_rate,
        }
    }

    pub fn cooldown_ms(&self) -> Millis {
        secs_to_ms(self.cooldown_s)
    }

    pub fn engagement_window_ms(&self) -> Millis {
        secs_to_ms(self.engagement_window_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_json() {
        let c: ControllerConfig = serde_json::from_str(r#"{"food_rate": 10, "water_rate": 20}"#).unwrap();
        assert_eq!(c, ControllerConfig::new(10.0, 20.0));
        assert_eq!(c.teaser_quantity, 5.0);
        assert_eq!(c.meal_quantity, 40.0);
        assert_eq!(c.engagement_window_s, 10.0);
        assert_eq!(c.cooldown_s, 1800.0);
        c.validate().unwrap();
    }

    #[test]
    fn rates_are_required() {
        assert!(serde_json::from_str::<ControllerConfig>(r#"{"food_rate": 10}"#).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ControllerConfig::new(10.0, 10.0);
        c.teaser_quantity = 40.0;
        assert!(c.validate().is_err());
        let mut c = ControllerConfig::new(0.0, 10.0);
        assert!(c.validate().is_err());
        c.food_rate = 1.0;
        c.cooldown_s = 0.0;
        assert!(c.validate().is_err());
    }
}
