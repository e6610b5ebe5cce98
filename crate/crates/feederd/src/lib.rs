//! The feeder daemon: runs the control loop against a camera directory or
//! the simulator, keeps the event log, and serves the HTTP API.

mod api;
pub mod camera;
pub mod config;
pub mod daemon;
pub mod log;
pub mod mirror;
pub mod schedule_store;
pub mod status;

pub use api::CAPTURE_TIMESTAMP_HEADER;
pub use config::{DaemonConfig, SimSettings};
pub use daemon::{Daemon, SourceMode, EVENT_LOG_FILE, SCHEDULE_FILE};
pub use log::{read_log, EventLog, LogError};
pub use mirror::MirrorPayload;
pub use schedule_store::{ScheduleStore, VersionedSchedule};
pub use status::{DispenseSummary, Projection, StatusSnapshot};
