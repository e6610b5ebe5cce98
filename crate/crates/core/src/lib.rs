//! Camera-driven pet feeder: bowl vision, timed actuation, the feeding
//! decision loop and a deterministic simulated world to drive it.
//!
//! The vision and actuation math is generic over [`Scalar`] (`f32` or
//! `f64`). The controller, the simulator and the event types work in `f64`;
//! the aliases below name those instantiations.

pub mod actuation;
pub mod clock;
pub mod control;
pub mod event;
pub mod num;
pub mod sim;
pub mod vision;

pub use num::Scalar;

pub type FoodLevelReading = vision::FoodLevelReading<f64>;
pub type PresenceReading = vision::PresenceReading<f64>;
pub type BackgroundModel = vision::BackgroundModel<f64>;
pub type LevelConfig = vision::LevelConfig<f64>;
pub type DispensePlan = actuation::DispensePlan<f64>;
pub type ActuatorCommand = actuation::ActuatorCommand<f64>;
pub type CommandTrace = actuation::CommandTrace<f64>;
pub type DispenseCycle = actuation::DispenseCycle<f64>;
