//! Tagged, timestamped records shared by the event log, the HTTP API and
//! the simulator trace.
//!
//! On disk and on the wire an event is one JSON object with the fields
//! `seq`, `ts`, `kind` and `payload`.

use serde::{Deserialize, Serialize};

use crate::actuation::Target;
use crate::clock::Millis;
use crate::control::Schedule;
use crate::{CommandTrace, DispensePlan, FoodLevelReading, PresenceReading};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederEvent {
    pub seq: u64,
    pub ts: Millis,
    #[serde(flatten)]
    pub body: EventBody,
}

/// An event that has not been assigned its log sequence number yet.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDraft {
    pub ts: Millis,
    pub body: EventBody,
}

impl EventDraft {
    pub fn new(ts: Millis, body: EventBody) -> Self {
        Self { ts, body }
    }

    pub fn commit(self, seq: u64) -> FeederEvent {
        FeederEvent {
            seq,
            ts: self.ts,
            body: self.body,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    FoodLevel,
    Presence,
    Dispense,
    Alert,
    Command,
    CameraUnavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    FoodLevel(FoodLevelReading),
    Presence(PresenceReading),
    Dispense(DispenseRecord),
    Alert(AlertRecord),
    Command(CommandRecord),
    CameraUnavailable { reason: String },
}

impl EventBody {
    pub fn kind(&self) -> EventKind {
        match self {
            EventBody::FoodLevel(_) => EventKind::FoodLevel,
            EventBody::Presence(_) => EventKind::Presence,
            EventBody::Dispense(_) => EventKind::Dispense,
            EventBody::Alert(_) => EventKind::Alert,
            EventBody::Command(_) => EventKind::Command,
            EventBody::CameraUnavailable { .. } => EventKind::CameraUnavailable,
        }
    }
}

/// Why a dispense was requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "trigger", rename_all = "snake_case")]
pub enum DispenseCause {
    /// Small portion on pet arrival.
    Teaser,
    /// Top-up to a full meal after sustained presence.
    Meal,
    /// Bowl read low with no pet around.
    Refill,
    Schedule { time_of_day: u32 },
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum DispenseResult {
    Completed,
    Aborted { reason: String },
    /// Rejected because the target was already dispensing.
    Busy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispenseRecord {
    pub plan: DispensePlan,
    pub cause: DispenseCause,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_id: Option<u64>,
    /// Capture time of the frame (or tick) that produced the request.
    pub requested_at: Millis,
    pub result: DispenseResult,
    /// Amount released: `rate x open time`.
    pub dispensed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<CommandTrace>,
}

impl DispenseRecord {
    pub fn target(&self) -> Target {
        self.plan.target
    }

    /// Time of the first actuator open, when one was issued.
    pub fn opened_at(&self) -> Option<Millis> {
        self.trace.as_ref().filter(|t| t.opened()).map(|t| t.started_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlertKind {
    LowFood,
    LowWater,
    DispenseFault,
    MirrorUnreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertRecord {
    pub kind: AlertKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandRecord {
    ManualDispense { target: Target, quantity: f64 },
    ScheduleReplaced { version: u64, schedule: Schedule },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape() {
        let ev = EventDraft::new(
            12,
            EventBody::Alert(AlertRecord {
                kind: AlertKind::LowFood,
                message: "bowl at 10%".into(),
            }),
        )
        .commit(3);
        let json: serde_json::Value = serde_json::to_value(&ev).unwrap();
        assert_eq!(json["seq"], 3);
        assert_eq!(json["ts"], 12);
        assert_eq!(json["kind"], "Alert");
        assert_eq!(json["payload"]["kind"], "LowFood");
        let back: FeederEvent = serde_json::from_value(json).unwrap();
        assert_eq!(back, ev);
    }

    #[test]
    fn camera_event_shape() {
        let ev = EventDraft::new(1, EventBody::CameraUnavailable { reason: "no frames".into() }).commit(1);
        let line = serde_json::to_string(&ev).unwrap();
        assert_eq!(
            line,
            r#"{"seq":1,"ts":1,"kind":"CameraUnavailable","payload":{"reason":"no frames"}}"#
        );
        assert_eq!(ev.body.kind(), EventKind::CameraUnavailable);
    }
}
