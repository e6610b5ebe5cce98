//! Dispense planning and execution against an abstract actuator port.
//!
//! A dispense is always `open -> hold for T -> close`, with
//! `T = quantity / rate`. The close is issued on every path that issued an
//! open, including faults.

mod command;
mod dispenser;
mod plan;
mod port;

use serde::{Deserialize, Serialize};

pub use command::{commands_balanced, ActuatorCommand, CommandTrace, Duty, Outcome};
pub use dispenser::{begin, execute, DispenseCycle, TargetGuard, TargetLocks};
pub use plan::{plan_dispense, DispensePlan};
pub use port::{ActuatorPort, LoggingPort, PortCall, PortFault, ScriptedFault, ScriptedPort};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[serde(alias = "Food")]
    Food,
    #[serde(alias = "Water")]
    Water,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Food, Target::Water];

    pub fn unit(&self) -> &'static str {
        match self {
            Target::Food => "g",
            Target::Water => "ml",
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::Food => "food",
            Target::Water => "water",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActuationError {
    #[error("dispensing rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("quantity must be non-negative and finite, got {0}")]
    NegativeQuantity(f64),
    #[error("a {0} dispense is already in progress")]
    Busy(Target),
}
