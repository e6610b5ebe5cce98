use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use feeder_core::actuation::Target;
use feeder_core::control::{ControllerConfig, Schedule};
use feeder_core::sim::{SimConfig, WorldParams};
use feeder_core::vision::BowlRegion;
use serde::{Deserialize, Serialize};

fn d_interval() -> f64 {
    2.0
}
fn d_max_food() -> f64 {
    200.0
}
fn d_max_water() -> f64 {
    500.0
}
fn d_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}
fn d_width() -> u32 {
    160
}
fn d_height() -> u32 {
    120
}
fn d_latency() -> f64 {
    0.2
}
fn d_mirror_timeout() -> f64 {
    2.0
}

/// Simulated camera and world used by `--sim` and by scenario runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    #[serde(default = "d_width")]
    pub frame_width: u32,
    #[serde(default = "d_height")]
    pub frame_height: u32,
    #[serde(default)]
    pub seed: u64,
    /// Random pet visits in the live simulator.
    #[serde(default)]
    pub stochastic: bool,
    #[serde(default)]
    pub world: WorldParams,
    /// Scenario runs only: frame-to-actuator delay.
    #[serde(default = "d_latency")]
    pub processing_latency_s: f64,
    /// Scenario runs only: chance that an actuator hold faults.
    #[serde(default)]
    pub fault_rate: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            frame_width: d_width(),
            frame_height: d_height(),
            seed: 0,
            stochastic: false,
            world: WorldParams::default(),
            processing_latency_s: d_latency(),
            fault_rate: 0.0,
        }
    }
}

/// The daemon's JSON config file. Controller tunables (thresholds, rates,
/// quantities) sit at the top level next to the bowl calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaemonConfig {
    pub bowl: BowlRegion,
    #[serde(flatten)]
    pub controller: ControllerConfig,
    #[serde(default = "d_interval")]
    pub capture_interval_s: f64,
    /// Largest accepted manual food dispense, grams.
    #[serde(default = "d_max_food")]
    pub max_food_quantity: f64,
    /// Largest accepted manual water dispense, millilitres.
    #[serde(default = "d_max_water")]
    pub max_water_quantity: f64,
    /// Event log and schedule location; relative paths resolve against the
    /// config file's directory, which is also the default.
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    /// Schedule used until one is stored through the API.
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default = "d_listen")]
    pub listen: SocketAddr,
    #[serde(default)]
    pub mirror_url: Option<String>,
    #[serde(default = "d_mirror_timeout")]
    pub mirror_timeout_s: f64,
    #[serde(default)]
    pub sim: SimSettings,
}

impl DaemonConfig {
    /// Config with defaults everywhere except the required calibration.
    pub fn new(bowl: BowlRegion, food_rate: f64, water_rate: f64) -> Self {
        Self {
            bowl,
            controller: ControllerConfig::new(food_rate, water_rate),
            capture_interval_s: d_interval(),
            max_food_quantity: d_max_food(),
            max_water_quantity: d_max_water(),
            data_dir: None,
            schedule: Schedule::default(),
            listen: d_listen(),
            mirror_url: None,
            mirror_timeout_s: d_mirror_timeout(),
            sim: SimSettings::default(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: DaemonConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.data_dir = Some(match config.data_dir.take() {
            Some(dir) if dir.is_relative() => base.join(dir),
            Some(dir) => dir,
            None => base,
        });
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.controller.validate()?;
        self.schedule.validate().context("bootstrap schedule")?;
        if !(self.capture_interval_s.is_finite() && self.capture_interval_s >= 0.001) {
            bail!("capture_interval_s must be at least 1 ms, got {}", self.capture_interval_s);
        }
        for (name, v) in [
            ("max_food_quantity", self.max_food_quantity),
            ("max_water_quantity", self.max_water_quantity),
            ("mirror_timeout_s", self.mirror_timeout_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bail!("{name} must be positive, got {v}");
            }
        }
        self.sim.world.validate().map_err(anyhow::Error::msg)?;
        Ok(())
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn max_quantity(&self, target: Target) -> f64 {
        match target {
            Target::Food => self.max_food_quantity,
            Target::Water => self.max_water_quantity,
        }
    }

    /// Device side of an offline scenario run.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            controller: self.controller.clone(),
            bowl: self.bowl,
            frame_width: self.sim.frame_width,
            frame_height: self.sim.frame_height,
            capture_interval_s: self.capture_interval_s,
            processing_latency_s: self.sim.processing_latency_s,
            schedule: self.schedule.clone(),
            fault_rate: self.sim.fault_rate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let c: DaemonConfig =
            serde_json::from_str(r#"{"bowl": {"cx": 80, "cy": 60, "r": 20}, "food_rate": 10, "water_rate": 20}"#)
                .unwrap();
        assert_eq!(c.bowl, BowlRegion::new(80, 60, 20));
        assert_eq!(c.controller.food_rate, 10.0);
        assert_eq!(c.controller.teaser_quantity, 5.0);
        assert_eq!(c.controller.intensity_threshold, 50);
        assert_eq!(c.capture_interval_s, 2.0);
        assert_eq!(c.max_water_quantity, 500.0);
        c.validate().unwrap();
    }

    #[test]
    fn rates_are_required() {
        assert!(serde_json::from_str::<DaemonConfig>(r#"{"bowl": {"cx": 1, "cy": 1, "r": 1}}"#).is_err());
    }

    #[test]
    fn data_dir_defaults_to_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feeder.json");
        std::fs::write(
            &path,
            r#"{"bowl": {"cx": 1, "cy": 1, "r": 1}, "food_rate": 1, "water_rate": 1, "low_level_threshold": 25}"#,
        )
        .unwrap();
        let c = DaemonConfig::load(&path).unwrap();
        assert_eq!(c.data_dir(), dir.path());
        assert_eq!(c.controller.low_level_threshold, 25.0);
    }
}
