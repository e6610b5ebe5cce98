use serde::{Deserialize, Serialize};

use super::Target;
use crate::clock::Millis;
use crate::num::Scalar;

/// Servo duty vocabulary: 7 % opens the food gate, 0 % closes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Duty {
    Open,
    Closed,
}

impl Duty {
    pub fn percent(self) -> u8 {
        match self {
            Duty::Open => 7,
            Duty::Closed => 0,
        }
    }
}

impl From<Duty> for u8 {
    fn from(d: Duty) -> u8 {
        d.percent()
    }
}

impl TryFrom<u8> for Duty {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            7 => Ok(Duty::Open),
            0 => Ok(Duty::Closed),
            other => Err(format!("duty {other} is neither 7 (open) nor 0 (closed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActuatorCommand<S> {
    FoodValve { duty_percent: Duty },
    WaterPump { on: bool },
    Wait { seconds: S },
}

impl<S> ActuatorCommand<S> {
    pub fn open(target: Target) -> Self {
        match target {
            Target::Food => ActuatorCommand::FoodValve { duty_percent: Duty::Open },
            Target::Water => ActuatorCommand::WaterPump { on: true },
        }
    }

    pub fn close(target: Target) -> Self {
        match target {
            Target::Food => ActuatorCommand::FoodValve {
                duty_percent: Duty::Closed,
            },
            Target::Water => ActuatorCommand::WaterPump { on: false },
        }
    }

    /// `(target, is_open)` for valve and pump commands.
    pub fn actuation(&self) -> Option<(Target, bool)> {
        match self {
            ActuatorCommand::FoodValve { duty_percent } => Some((Target::Food, *duty_percent == Duty::Open)),
            ActuatorCommand::WaterPump { on } => Some((Target::Water, *on)),
            ActuatorCommand::Wait { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandTrace<S> {
    pub commands: Vec<ActuatorCommand<S>>,
    pub started_at: Millis,
    pub finished_at: Millis,
    pub outcome: Outcome,
}

impl<S: Scalar> CommandTrace<S> {
    /// Total time the actuator was held open.
    pub fn open_seconds(&self) -> S {
        self.commands
            .iter()
            .map(|c| match c {
                ActuatorCommand::Wait { seconds } => *seconds,
                _ => S::zero(),
            })
            .fold(S::zero(), |a, b| a + b)
    }

    pub fn is_completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    /// Whether any open command was issued.
    pub fn opened(&self) -> bool {
        self.commands
            .iter()
            .any(|c| matches!(c.actuation(), Some((_, true))))
    }

    pub fn is_balanced(&self) -> bool {
        commands_balanced(&self.commands)
    }
}

/// Per target, opens and closes strictly alternate starting with an open,
/// and every target ends closed.
pub fn commands_balanced<S>(commands: &[ActuatorCommand<S>]) -> bool {
    let mut open = [false; 2];
    for cmd in commands {
        if let Some((target, opening)) = cmd.actuation() {
            let slot = &mut open[target as usize];
            if *slot == opening {
                return false;
            }
            *slot = opening;
        }
    }
    open == [false, false]
}
