use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BowlRenderer, SimError, WorldParams, WorldState};
use crate::actuation::{begin, ActuatorPort, PortFault, Target, TargetLocks};
use crate::clock::{ms_to_secs, secs_to_ms, Millis};
use crate::control::{Captured, Controller, ControllerConfig, DispenseRequest, Schedule};
use crate::event::{DispenseCause, DispenseResult, EventBody, EventDraft, FeederEvent};
use crate::vision::BowlRegion;
use crate::DispenseCycle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScriptEvent {
    PetArrives,
    PetLeaves,
    /// Sets the bowl contents in grams.
    SetFoodMass(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    /// Seconds from scenario start.
    pub time: f64,
    pub event: ScriptEvent,
}

/// A run of the simulated world. Scripted pet events replace the random
/// arrival process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Seconds of virtual time.
    pub duration: f64,
    #[serde(default)]
    pub script: Vec<ScriptStep>,
    #[serde(default)]
    pub stochastic: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub world: WorldParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::ScenarioInvalid(m));
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return invalid(format!("duration {} must be finite and non-negative", self.duration));
        }
        for step in &self.script {
            if !(0.0..=self.duration).contains(&step.time) {
                return invalid(format!("script time {} outside [0, {}]", step.time, self.duration));
            }
            if let ScriptEvent::SetFoodMass(g) = step.event {
                if !(g.is_finite() && g >= 0.0) {
                    return invalid(format!("food mass {g} at {} must be non-negative", step.time));
                }
            }
        }
        if self.script.windows(2).any(|w| w[0].time > w[1].time) {
            return invalid("script times must be sorted".into());
        }
        self.world.validate().map_err(SimError::ScenarioInvalid)
    }

    fn scripted_pet(&self) -> bool {
        self.script
            .iter()
            .any(|s| matches!(s.event, ScriptEvent::PetArrives | ScriptEvent::PetLeaves))
    }
}

fn d_width() -> u32 {
    160
}
fn d_height() -> u32 {
    120
}
fn d_bowl() -> BowlRegion {
    BowlRegion::new(80, 60, 20)
}
fn d_interval() -> f64 {
    2.0
}
fn d_latency() -> f64 {
    0.2
}

/// Device side of a simulation: controller tunables, camera geometry and
/// timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub controller: ControllerConfig,
    #[serde(default = "d_bowl")]
    pub bowl: BowlRegion,
    #[serde(default = "d_width")]
    pub frame_width: u32,
    #[serde(default = "d_height")]
    pub frame_height: u32,
    #[serde(default = "d_interval")]
    pub capture_interval_s: f64,
    /// Time from frame capture to the actuator command it causes.
    #[serde(default = "d_latency")]
    pub processing_latency_s: f64,
    #[serde(default)]
    pub schedule: Schedule,
    /// Probability that a hold faults part way.
    #[serde(default)]
    pub fault_rate: f64,
}

impl SimConfig {
    pub fn new(controller: ControllerConfig) -> Self {
        Self {
            controller,
            bowl: d_bowl(),
            frame_width: d_width(),
            frame_height: d_height(),
            capture_interval_s: d_interval(),
            processing_latency_s: d_latency(),
            schedule: Schedule::default(),
            fault_rate: 0.0,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::ScenarioInvalid(m));
        if !(self.capture_interval_s.is_finite() && secs_to_ms(self.capture_interval_s) > 0) {
            return invalid(format!("capture interval {} must be positive", self.capture_interval_s));
        }
        if !(self.processing_latency_s >= 0.0 && self.processing_latency_s < self.capture_interval_s) {
            return invalid(format!(
                "processing latency {} must be in [0, capture interval)",
                self.processing_latency_s
            ));
        }
        if !(0.0..=1.0).contains(&self.fault_rate) {
            return invalid(format!("fault rate {} outside [0, 1]", self.fault_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    /// Completed dispenses over requested dispenses; `None` without requests.
    pub activation_success_rate: Option<f64>,
    /// Seconds from the triggering frame to the actuator open.
    pub mean_response_s: Option<f64>,
    pub max_response_s: Option<f64>,
    /// Seconds from a pet's arrival to the teaser's actuator open.
    pub max_arrival_response_s: Option<f64>,
    pub triggers: usize,
    pub dispenses: usize,
    pub failures: usize,
    pub teasers: usize,
    pub meals: usize,
    pub refills: usize,
    pub scheduled: usize,
    pub alerts: usize,
    pub frames: usize,
    pub visits: usize,
    pub final_food_mass: f64,
    pub food_dispensed: f64,
    pub food_eaten: f64,
    pub food_overflow: f64,
    pub clamp_events: u64,
    pub events: Vec<FeederEvent>,
}

/// Actuators of the simulated device. Holds return at once; faults are
/// drawn from a seeded generator.
struct SimPort {
    rng: ChaCha8Rng,
    fault_rate: f64,
}

impl ActuatorPort for SimPort {
    fn open(&mut self, _target: Target) -> Result<(), PortFault> {
        Ok(())
    }

    fn close(&mut self, _target: Target) -> Result<(), PortFault> {
        Ok(())
    }

    fn hold(&mut self, target: Target, seconds: f64) -> Result<(), PortFault> {
        if self.fault_rate > 0.0 && self.rng.random::<f64>() < self.fault_rate {
            let frac: f64 = self.rng.random();
            return Err(PortFault {
                reason: format!("simulated {target} jam"),
                elapsed_s: frac * seconds,
            });
        }
        Ok(())
    }
}

struct Active {
    cycle: DispenseCycle,
    request: DispenseRequest,
    end: Millis,
}

struct Run<'a> {
    world: WorldState,
    renderer: BowlRenderer,
    controller: Controller,
    port: SimPort,
    locks: TargetLocks,
    active: Vec<Active>,
    script: &'a [ScriptStep],
    next_script: usize,
    world_ms: Millis,
    pending_credit: f64,
    events: Vec<FeederEvent>,
}

impl Run<'_> {
    fn commit(&mut self, drafts: Vec<EventDraft>) {
        for d in drafts {
            let seq = self.events.len() as u64 + 1;
            self.events.push(d.commit(seq));
        }
    }

    fn advance_world(&mut self, to: Millis) {
        if to < self.world_ms {
            return;
        }
        let dt = ms_to_secs(to - self.world_ms);
        self.world.step(dt, std::mem::take(&mut self.pending_credit));
        self.world_ms = to;
    }

    /// Processes script steps and actuator closes up to `t`, in time order.
    fn advance_to(&mut self, t: Millis) {
        loop {
            let script_at = self.script.get(self.next_script).map(|s| secs_to_ms(s.time));
            let finish = self
                .active
                .iter()
                .enumerate()
                .min_by_key(|(_, a)| a.end)
                .map(|(i, a)| (i, a.end));
            match (finish, script_at) {
                (Some((i, end)), s) if end <= t && s.is_none_or(|s| end <= s) => {
                    self.advance_world(end);
                    let active = self.active.remove(i);
                    self.finish(active);
                }
                (_, Some(s)) if s <= t => {
                    self.advance_world(s);
                    match self.script[self.next_script].event {
                        ScriptEvent::PetArrives => self.world.set_pet_present(true),
                        ScriptEvent::PetLeaves => self.world.set_pet_present(false),
                        ScriptEvent::SetFoodMass(g) => self.world.set_food_mass(g),
                    }
                    self.next_script += 1;
                }
                _ => break,
            }
        }
        self.advance_world(t);
    }

    fn finish(&mut self, active: Active) {
        let trace = active.cycle.finish(&mut self.port, active.end);
        self.pending_credit += active.request.plan.credited(&trace);
        let drafts = self.controller.complete(&active.request, Ok(trace), active.end);
        self.commit(drafts);
    }

    fn start(&mut self, request: DispenseRequest, at: Millis) {
        match begin(&request.plan, &mut self.port, &self.locks, at) {
            Ok(mut cycle) => {
                let held = cycle.hold(&mut self.port);
                let end = at + secs_to_ms(held);
                let active = Active { cycle, request, end };
                if end == at {
                    self.finish(active);
                } else {
                    self.active.push(active);
                }
            }
            Err(busy) => {
                let drafts = self.controller.complete(&request, Err(busy), at);
                self.commit(drafts);
            }
        }
    }
}

/// Drives the controller against the simulated world in virtual time.
/// Frames are captured every `capture_interval_s` from t = 0 while
/// t < duration; dispenses still running at the end are carried to their
/// close.
pub fn run_scenario(scenario: &Scenario, config: &SimConfig) -> Result<ScenarioReport, SimError> {
    scenario.validate()?;
    config.validate()?;
    let stochastic = scenario.stochastic && !scenario.scripted_pet();
    let controller = Controller::new(config.controller.clone(), config.bowl, config.schedule.clone(), 0)?;
    let renderer = BowlRenderer::new(
        config.frame_width,
        config.frame_height,
        config.bowl,
        scenario.seed.wrapping_add(1),
    )?;
    let mut run = Run {
        world: WorldState::new(&scenario.world, scenario.seed, stochastic),
        renderer,
        controller,
        port: SimPort {
            rng: ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(2)),
            fault_rate: config.fault_rate,
        },
        locks: TargetLocks::new(),
        active: Vec::new(),
        script: &scenario.script,
        next_script: 0,
        world_ms: 0,
        pending_credit: 0.0,
        events: Vec::new(),
    };

    let duration_ms = secs_to_ms(scenario.duration);
    let interval_ms = secs_to_ms(config.capture_interval_s);
    let latency_ms = secs_to_ms(config.processing_latency_s);
    let mut frames = 0;
    let mut now: Millis = 0;
    while now < duration_ms {
        run.advance_to(now);
        let frame = run.renderer.render(&run.world);
        frames += 1;
        let out = run.controller.step(Ok(Captured::new(frame)), now);
        run.commit(out.events);
        if !out.requests.is_empty() {
            let open_at = now + latency_ms;
            run.advance_to(open_at);
            for request in out.requests {
                run.start(request, open_at);
            }
        }
        now += interval_ms;
    }
    if duration_ms > 0 {
        run.advance_to(duration_ms);
    }
    while let Some(end) = run.active.iter().map(|a| a.end).min() {
        run.advance_to(end);
    }

    Ok(report(run, frames))
}

fn report(run: Run<'_>, frames: usize) -> ScenarioReport {
    let mut r = ScenarioReport {
        activation_success_rate: None,
        mean_response_s: None,
        max_response_s: None,
        max_arrival_response_s: None,
        triggers: 0,
        dispenses: 0,
        failures: 0,
        teasers: 0,
        meals: 0,
        refills: 0,
        scheduled: 0,
        alerts: 0,
        frames,
        visits: run.world.arrivals.len(),
        final_food_mass: run.world.food_mass,
        food_dispensed: run.world.total_dispensed,
        food_eaten: run.world.total_eaten,
        food_overflow: run.world.total_overflow,
        clamp_events: run.world.clamp_events,
        events: Vec::new(),
    };
    let mut responses = Vec::new();
    let mut arrival_responses = Vec::new();
    for ev in &run.events {
        match &ev.body {
            EventBody::Alert(_) => r.alerts += 1,
            EventBody::Dispense(rec) => {
                r.triggers += 1;
                if rec.result == DispenseResult::Completed {
                    r.dispenses += 1;
                } else {
                    r.failures += 1;
                }
                match rec.cause {
                    DispenseCause::Teaser => r.teasers += 1,
                    DispenseCause::Meal => r.meals += 1,
                    DispenseCause::Refill => r.refills += 1,
                    DispenseCause::Schedule { .. } => r.scheduled += 1,
                    DispenseCause::Manual => {}
                }
                if let Some(opened) = rec.opened_at() {
                    responses.push(ms_to_secs(opened.saturating_sub(rec.requested_at)));
                    if rec.cause == DispenseCause::Teaser {
                        let frame_s = ms_to_secs(rec.requested_at);
                        if let Some(arrived) = run.world.arrivals.iter().rev().find(|&&a| a <= frame_s) {
                            arrival_responses.push(ms_to_secs(opened) - arrived);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    if r.triggers > 0 {
        r.activation_success_rate = Some(r.dispenses as f64 / r.triggers as f64);
    }
    let max = |v: &[f64]| v.iter().copied().reduce(f64::max);
    if !responses.is_empty() {
        r.mean_response_s = Some(responses.iter().sum::<f64>() / responses.len() as f64);
    }
    r.max_response_s = max(&responses);
    r.max_arrival_response_s = max(&arrival_responses);
    r.events = run.events;
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SimConfig {
        SimConfig::new(ControllerConfig::new(10.0, 20.0))
    }

    #[test]
    fn zero_length_is_empty() {
        let s = Scenario {
            duration: 0.0,
            script: vec![],
            stochastic: false,
            seed: 1,
            world: WorldParams::default(),
        };
        let r = run_scenario(&s, &config()).unwrap();
        assert_eq!(r.frames, 0);
        assert_eq!(r.dispenses, 0);
        assert!(r.events.is_empty());
        assert_eq!(r.activation_success_rate, None);
    }

    #[test]
    fn rejects_unsorted_script() {
        let s = Scenario {
            duration: 100.0,
            script: vec![
                ScriptStep {
                    time: 50.0,
                    event: ScriptEvent::PetLeaves,
                },
                ScriptStep {
                    time: 10.0,
                    event: ScriptEvent::PetArrives,
                },
            ],
            stochastic: false,
            seed: 0,
            world: WorldParams::default(),
        };
        assert!(matches!(run_scenario(&s, &config()), Err(SimError::ScenarioInvalid(_))));
    }

    #[test]
    fn latency_must_fit_interval() {
        let mut c = config();
        c.processing_latency_s = 2.0;
        let s = Scenario {
            duration: 10.0,
            script: vec![],
            stochastic: false,
            seed: 0,
            world: WorldParams::default(),
        };
        assert!(run_scenario(&s, &c).is_err());
    }

    #[test]
    fn scenario_json() {
        let s: Scenario = serde_json::from_str(
            r#"{"duration": 120, "script": [
                {"time": 10, "event": "PetArrives"},
                {"time": 70, "event": "PetLeaves"},
                {"time": 90, "event": {"SetFoodMass": 12.5}}
            ]}"#,
        )
        .unwrap();
        assert_eq!(s.script[2].event, ScriptEvent::SetFoodMass(12.5));
        assert_eq!(s.world, WorldParams::default());
    }
}
