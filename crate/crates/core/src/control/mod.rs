//! The feeding decision loop.
//!
//! [`decide`] is the pure rule set over one pair of readings;
//! [`Controller`] wraps it with the vision pipeline, schedules and the
//! manual command queue, one [`Controller::tick`] at a time.

mod config;
mod controller;
mod decide;
mod schedule;

pub use config::{ConfigError, ControllerConfig};
pub use controller::{CaptureError, Captured, Controller, DispenseRequest, FrameSource, ManualDispense, TickOutput};
pub use decide::{decide, Action, ControllerState, Phase};
pub use schedule::{day_start, next_scheduled_fire, EntryKey, FireLedger, Schedule, ScheduleEntry, ScheduleError, ScheduledFire};
