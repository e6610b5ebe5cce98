//! Deterministic simulated world for exercising the full feeding loop:
//! bowl food mass, pet visits, rendered camera frames and a virtual-time
//! scenario runner that reports activation and response metrics.

mod live;
mod render;
mod scenario;
mod world;

pub use live::LiveSim;
pub use render::{render_bowl_frame, BowlRenderer, DARK_INTENSITY, LIGHT_INTENSITY, PET_BLOB_FRACTION};
pub use scenario::{run_scenario, Scenario, ScenarioReport, ScriptEvent, ScriptStep, SimConfig};
pub use world::{world_step, WorldParams, WorldState};

use crate::control::ConfigError;
use crate::vision::VisionError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
