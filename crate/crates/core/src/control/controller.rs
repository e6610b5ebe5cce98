use std::collections::VecDeque;

use super::{decide, next_scheduled_fire, Action, ConfigError, ControllerConfig, ControllerState, Schedule, ScheduleError};
use crate::actuation::{plan_dispense, ActuationError, Outcome, Target};
use crate::clock::{Clock, Millis};
use crate::event::{AlertKind, AlertRecord, DispenseCause, DispenseRecord, DispenseResult, EventBody, EventDraft};
use crate::vision::{build_mask, detect_presence, encode_pgm, food_level, BowlRegion, Frame, Mask, VisionError};
use crate::{BackgroundModel, CommandTrace, DispensePlan, FoodLevelReading, PresenceReading};

/// A captured frame, optionally with the exact bytes it was decoded from.
#[derive(Debug, Clone, PartialEq)]
pub struct Captured {
    pub frame: Frame,
    pub encoded: Option<Vec<u8>>,
}

impl Captured {
    pub fn new(frame: Frame) -> Self {
        Self { frame, encoded: None }
    }

    pub fn with_encoded(frame: Frame, encoded: Vec<u8>) -> Self {
        Self {
            frame,
            encoded: Some(encoded),
        }
    }

    /// PGM bytes: the ingested file when there was one, else an encoding.
    pub fn into_pgm(self) -> Vec<u8> {
        match self.encoded {
            Some(bytes) => bytes,
            None => encode_pgm(&self.frame),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CaptureError {
    #[error("camera unavailable: {0}")]
    Unavailable(String),
}

pub trait FrameSource {
    fn capture(&mut self, now: Millis) -> Result<Captured, CaptureError>;
}

impl<F> FrameSource for F
where
    F: FnMut(Millis) -> Result<Captured, CaptureError>,
{
    fn capture(&mut self, now: Millis) -> Result<Captured, CaptureError> {
        self(now)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManualDispense {
    pub command_id: u64,
    pub target: Target,
    pub quantity: f64,
}

/// A dispense the controller wants executed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispenseRequest {
    pub plan: DispensePlan,
    pub cause: DispenseCause,
    pub command_id: Option<u64>,
    /// Tick (frame capture) time that produced the request.
    pub requested_at: Millis,
}

#[derive(Debug, Clone, Default)]
pub struct TickOutput {
    pub now: Millis,
    pub captured: Option<Captured>,
    pub level: Option<FoodLevelReading>,
    pub presence: Option<PresenceReading>,
    pub actions: Vec<Action>,
    pub requests: Vec<DispenseRequest>,
    pub events: Vec<EventDraft>,
}

/// Owns the vision state, protocol state, schedule and command queue.
/// Single-threaded: one tick at a time.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControllerConfig,
    bowl: BowlRegion,
    mask: Option<Mask>,
    background: BackgroundModel,
    state: ControllerState,
    schedule: Schedule,
    queue: VecDeque<ManualDispense>,
    camera_down: bool,
    water_used: f64,
    low_water_alerted: bool,
}

impl Controller {
    pub fn new(
        config: ControllerConfig,
        bowl: BowlRegion,
        schedule: Schedule,
        started_at: Millis,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        schedule.validate().map_err(|e| ConfigError(e.to_string()))?;
        let background = new_background(&config)?;
        Ok(Self {
            config,
            bowl,
            mask: None,
            background,
            state: ControllerState::new(started_at),
            schedule,
            queue: VecDeque::new(),
            camera_down: false,
            water_used: 0.0,
            low_water_alerted: false,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn mask(&self) -> Option<&Mask> {
        self.mask.as_ref()
    }

    pub fn water_used(&self) -> f64 {
        self.water_used
    }

    /// Restores bookkeeping recovered from the event log after a restart.
    pub fn restore(&mut self, last_food: Option<Millis>, last_water: Option<Millis>, water_used: f64) {
        self.state.last_food_dispense = last_food;
        self.state.last_water_dispense = last_water;
        self.water_used = water_used;
        self.low_water_alerted = self.water_low();
    }

    pub fn set_schedule(&mut self, schedule: Schedule) -> Result<(), ScheduleError> {
        schedule.validate()?;
        self.schedule = schedule;
        Ok(())
    }

    /// Queues a manual dispense for the next tick.
    pub fn submit(&mut self, command: ManualDispense) {
        self.queue.push_back(command);
    }

    pub fn pending_commands(&self) -> usize {
        self.queue.len()
    }

    pub fn tick(&mut self, source: &mut dyn FrameSource, clock: &dyn Clock) -> TickOutput {
        let now = clock.now_ms();
        let capture = source.capture(now);
        self.step(capture, now)
    }

    /// Tick body for an already captured (or failed) frame at time `now`.
    pub fn step(&mut self, capture: Result<Captured, CaptureError>, now: Millis) -> TickOutput {
        let mut out = TickOutput {
            now,
            ..TickOutput::default()
        };

        match capture.map_err(|e| e.to_string()).and_then(|c| {
            let readings = self.analyze(&c.frame, now).map_err(|e| e.to_string())?;
            Ok((c, readings))
        }) {
            Ok((captured, (level, presence))) => {
                self.camera_down = false;
                out.events.push(EventDraft::new(now, EventBody::FoodLevel(level)));
                out.events.push(EventDraft::new(now, EventBody::Presence(presence)));
                let (state, actions) = decide(&self.state, &self.config, &level, &presence, now);
                self.state = state;
                for action in &actions {
                    match action {
                        Action::Dispense { plan, cause } => out.requests.push(DispenseRequest {
                            plan: *plan,
                            cause: *cause,
                            command_id: None,
                            requested_at: now,
                        }),
                        Action::Alert { kind, message } => out.events.push(alert(now, *kind, message.clone())),
                    }
                }
                out.actions = actions;
                out.captured = Some(captured);
                out.level = Some(level);
                out.presence = Some(presence);
            }
            Err(reason) => {
                if !self.camera_down {
                    out.events.push(EventDraft::new(now, EventBody::CameraUnavailable { reason }));
                }
                self.camera_down = true;
            }
        }

        while let Some(fire) = next_scheduled_fire(&self.schedule, &self.state.fired, now, self.config.utc_offset_s) {
            self.state.fired.record(&fire);
            let target = fire.key.target;
            if let Ok(plan) = plan_dispense(target, fire.entry.quantity, self.config.rate(target)) {
                self.state.note_dispense(target, now);
                out.requests.push(DispenseRequest {
                    plan,
                    cause: DispenseCause::Schedule {
                        time_of_day: fire.key.time_of_day,
                    },
                    command_id: None,
                    requested_at: now,
                });
            }
        }

        while let Some(cmd) = self.queue.pop_front() {
            match plan_dispense(cmd.target, cmd.quantity, self.config.rate(cmd.target)) {
                Ok(plan) => {
                    self.state.note_dispense(cmd.target, now);
                    out.requests.push(DispenseRequest {
                        plan,
                        cause: DispenseCause::Manual,
                        command_id: Some(cmd.command_id),
                        requested_at: now,
                    });
                }
                Err(e) => {
                    let plan = DispensePlan {
                        target: cmd.target,
                        quantity: cmd.quantity,
                        rate: self.config.rate(cmd.target),
                        duration_s: 0.0,
                    };
                    out.events.push(EventDraft::new(
                        now,
                        EventBody::Dispense(DispenseRecord {
                            plan,
                            cause: DispenseCause::Manual,
                            command_id: Some(cmd.command_id),
                            requested_at: now,
                            result: DispenseResult::Aborted { reason: e.to_string() },
                            dispensed: 0.0,
                            trace: None,
                        }),
                    ));
                }
            }
        }
        out
    }

    fn analyze(&mut self, frame: &Frame, now: Millis) -> Result<(FoodLevelReading, PresenceReading), VisionError> {
        let dims = frame.dimensions();
        if self.mask.as_ref().is_none_or(|m| m.dimensions() != dims) {
            self.mask = Some(build_mask(dims.0, dims.1, self.bowl)?);
            if self.background.dimensions().is_some_and(|d| d != dims) {
                self.background = new_background(&self.config).map_err(|e| VisionError::InvalidParameter(e.0))?;
            }
        }
        let mask = self.mask.as_ref().expect("mask built above");
        let level = food_level(frame, mask, &self.config.level_config(), now)?;
        let foreground = self.background.update(frame)?;
        let presence = detect_presence(&foreground, self.config.presence_threshold, now);
        Ok((level, presence))
    }

    fn water_low(&self) -> bool {
        self.config
            .water_reservoir_ml
            .is_some_and(|cap| cap - self.water_used < self.config.low_water_ml)
    }

    /// Turns an execution result into its Dispense event plus any alerts.
    pub fn complete(
        &mut self,
        request: &DispenseRequest,
        result: Result<CommandTrace, ActuationError>,
        now: Millis,
    ) -> Vec<EventDraft> {
        let mut events = Vec::new();
        let (result, dispensed, trace) = match result {
            Ok(trace) => {
                let dispensed = request.plan.credited(&trace);
                let result = match &trace.outcome {
                    Outcome::Completed => DispenseResult::Completed,
                    Outcome::Aborted { reason } => DispenseResult::Aborted { reason: reason.clone() },
                };
                (result, dispensed, Some(trace))
            }
            Err(ActuationError::Busy(_)) => (DispenseResult::Busy, 0.0, None),
            Err(e) => (DispenseResult::Aborted { reason: e.to_string() }, 0.0, None),
        };
        let fault = match &result {
            DispenseResult::Aborted { reason } => Some(reason.clone()),
            _ => None,
        };
        events.push(EventDraft::new(
            now,
            EventBody::Dispense(DispenseRecord {
                plan: request.plan,
                cause: request.cause,
                command_id: request.command_id,
                requested_at: request.requested_at,
                result,
                dispensed,
                trace,
            }),
        ));
        if let Some(reason) = fault {
            events.push(alert(
                now,
                AlertKind::DispenseFault,
                format!("{} dispense aborted: {reason}", request.plan.target),
            ));
        }
        if request.plan.target == Target::Water && dispensed > 0.0 {
            self.water_used += dispensed;
            if self.water_low() && !self.low_water_alerted {
                self.low_water_alerted = true;
                let cap = self.config.water_reservoir_ml.unwrap_or_default();
                events.push(alert(
                    now,
                    AlertKind::LowWater,
                    format!("about {:.0} ml left in the reservoir", (cap - self.water_used).max(0.0)),
                ));
            }
        }
        events
    }
}

fn new_background(config: &ControllerConfig) -> Result<BackgroundModel, ConfigError> {
    BackgroundModel::new(config.background_alpha, config.diff_threshold).map_err(|e| ConfigError(e.to_string()))
}

fn alert(ts: Millis, kind: AlertKind, message: String) -> EventDraft {
    EventDraft::new(ts, EventBody::Alert(AlertRecord { kind, message }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::{execute, LoggingPort, TargetLocks};
    use crate::clock::VirtualClock;
    use crate::control::ScheduleEntry;
    use crate::event::EventKind;

    fn controller() -> Controller {
        Controller::new(
            ControllerConfig::new(10.0, 20.0),
            BowlRegion::new(50, 50, 10),
            Schedule::default(),
            0,
        )
        .unwrap()
    }

    fn unavailable(_: Millis) -> Result<Captured, CaptureError> {
        Err(CaptureError::Unavailable("no device".into()))
    }

    #[test]
    fn camera_unavailable_is_an_event() {
        let mut c = controller();
        let clock = VirtualClock::new(1000);
        let out = c.tick(&mut unavailable, &clock);
        assert!(out.requests.is_empty());
        assert_eq!(out.events.len(), 1);
        assert_eq!(out.events[0].body.kind(), EventKind::CameraUnavailable);
        // Not repeated while the outage lasts.
        clock.advance(2000);
        assert!(c.tick(&mut unavailable, &clock).events.is_empty());
    }

    #[test]
    fn readings_are_emitted() {
        let mut c = controller();
        let frame = Frame::filled(100, 100, 10).unwrap();
        let out = c.step(Ok(Captured::new(frame)), 5);
        let kinds: Vec<_> = out.events.iter().map(|e| e.body.kind()).collect();
        assert_eq!(kinds, vec![EventKind::FoodLevel, EventKind::Presence]);
        assert_eq!(out.level.unwrap().percent, 100.0);
        assert!(out.events.iter().all(|e| e.ts == 5));
    }

    #[test]
    fn off_frame_bowl_reported_as_unusable_frame() {
        let mut c = Controller::new(
            ControllerConfig::new(10.0, 20.0),
            BowlRegion::new(500, 500, 3),
            Schedule::default(),
            0,
        )
        .unwrap();
        let out = c.step(Ok(Captured::new(Frame::filled(10, 10, 0).unwrap())), 0);
        assert_eq!(out.events[0].body.kind(), EventKind::CameraUnavailable);
    }

    #[test]
    fn manual_commands_drain_at_tick() {
        let mut c = controller();
        c.submit(ManualDispense {
            command_id: 7,
            target: Target::Food,
            quantity: 20.0,
        });
        assert_eq!(c.pending_commands(), 1);
        let out = c.step(Err(CaptureError::Unavailable("x".into())), 0);
        assert_eq!(out.requests.len(), 1);
        let req = out.requests[0];
        assert_eq!(req.command_id, Some(7));
        assert_eq!(req.plan.duration_s, 2.0);
        assert_eq!(c.pending_commands(), 0);
    }

    #[test]
    fn schedule_fires_merge_into_tick() {
        let mut c = controller();
        c.set_schedule(Schedule {
            entries: vec![],
            water_entries: vec![ScheduleEntry {
                time_of_day: 60,
                quantity: 100.0,
            }],
        })
        .unwrap();
        let frame = Frame::filled(100, 100, 10).unwrap();
        assert!(c.step(Ok(Captured::new(frame.clone())), 59_000).requests.is_empty());
        let out = c.step(Ok(Captured::new(frame.clone())), 61_000);
        assert_eq!(out.requests.len(), 1);
        assert_eq!(out.requests[0].plan.target, Target::Water);
        assert_eq!(out.requests[0].plan.duration_s, 5.0);
        assert!(c.step(Ok(Captured::new(frame)), 63_000).requests.is_empty());
    }

    #[test]
    fn completion_events_and_low_water() {
        let mut cfg = ControllerConfig::new(10.0, 20.0);
        cfg.water_reservoir_ml = Some(250.0);
        cfg.low_water_ml = 100.0;
        let mut c = Controller::new(cfg, BowlRegion::new(50, 50, 10), Schedule::default(), 0).unwrap();
        let req = DispenseRequest {
            plan: plan_dispense(Target::Water, 200.0, 20.0).unwrap(),
            cause: DispenseCause::Manual,
            command_id: Some(1),
            requested_at: 0,
        };
        let trace = execute(&req.plan, &mut LoggingPort::new(), &TargetLocks::new(), &VirtualClock::new(0));
        let events = c.complete(&req, trace, 10_000);
        assert_eq!(events.len(), 2);
        match &events[0].body {
            EventBody::Dispense(rec) => {
                assert_eq!(rec.result, DispenseResult::Completed);
                assert_eq!(rec.dispensed, 200.0);
                assert_eq!(rec.command_id, Some(1));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(&events[1].body, EventBody::Alert(a) if a.kind == AlertKind::LowWater));
        let busy = c.complete(&req, Err(ActuationError::Busy(Target::Water)), 11_000);
        assert_eq!(busy.len(), 1);
        assert!(matches!(&busy[0].body, EventBody::Dispense(r) if r.result == DispenseResult::Busy));
    }
}
