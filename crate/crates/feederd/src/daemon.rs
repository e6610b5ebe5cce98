//! Daemon wiring: the control-loop thread, dispense workers, the HTTP
//! server and the status mirror.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use anyhow::Context;
use feeder_core::actuation::{execute, ActuationError, ActuatorPort, PortFault, Target, TargetLocks};
use feeder_core::clock::{secs_to_ms, Clock, Millis, SystemClock};
use feeder_core::control::{
    CaptureError, Captured, Controller, DispenseRequest, FrameSource, ManualDispense, Schedule, ScheduleError,
};
use feeder_core::event::{AlertKind, AlertRecord, CommandRecord, EventBody, EventDraft, FeederEvent};
use feeder_core::sim::LiveSim;
use feeder_core::CommandTrace;
use tokio::sync::{oneshot, watch};

use crate::api;
use crate::camera::DirCamera;
use crate::config::DaemonConfig;
use crate::log::EventLog;
use crate::mirror::{run_mirror, Backoff, MirrorFailure, MirrorPayload};
use crate::schedule_store::{ScheduleStore, VersionedSchedule};
use crate::status::{Projection, StatusSnapshot};

pub const EVENT_LOG_FILE: &str = "events.jsonl";
pub const SCHEDULE_FILE: &str = "schedule.json";

/// Where frames come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceMode {
    Sim,
    CameraDir(PathBuf),
}

enum Source {
    Sim(Box<LiveSim>),
    Camera(DirCamera),
}

impl FrameSource for Source {
    fn capture(&mut self, now: Millis) -> Result<Captured, CaptureError> {
        match self {
            Source::Sim(s) => s.capture(now),
            Source::Camera(c) => c.capture(now),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LatestFrame {
    pub pgm: Vec<u8>,
    pub captured_at: Millis,
}

#[derive(Debug, thiserror::Error)]
pub enum ScheduleUpdateError {
    #[error(transparent)]
    Invalid(#[from] ScheduleError),
    #[error("storing schedule: {0}")]
    Io(String),
}

pub(crate) enum LoopMsg {
    Dispense {
        target: Target,
        quantity: f64,
        reply: oneshot::Sender<Result<u64, String>>,
    },
    ReplaceSchedule {
        schedule: Schedule,
        reply: oneshot::Sender<Result<VersionedSchedule, ScheduleUpdateError>>,
    },
    MirrorFailed(MirrorFailure),
    DispenseDone {
        request: DispenseRequest,
        result: Result<CommandTrace, ActuationError>,
    },
    Shutdown,
}

/// State readable by the HTTP handlers. Only the control loop writes it.
pub struct Shared {
    pub config: DaemonConfig,
    pub log: EventLog,
    pub status: RwLock<Projection>,
    pub frame: RwLock<Option<LatestFrame>>,
    pub schedule: RwLock<VersionedSchedule>,
    pub started: Instant,
    pub(crate) shutdown: watch::Sender<bool>,
}

impl Shared {
    pub fn snapshot(&self) -> StatusSnapshot {
        let now = SystemClock::new().now_ms();
        let version = self.schedule.read().expect("schedule lock").version;
        self.status
            .read()
            .expect("status lock")
            .snapshot(now, version, self.started.elapsed().as_secs_f64())
    }
}

/// Actuators with no hardware attached: each cycle is logged and timed.
#[derive(Debug, Default, Clone, Copy)]
pub struct TimedPort;

impl ActuatorPort for TimedPort {
    fn open(&mut self, target: Target) -> Result<(), PortFault> {
        tracing::debug!(%target, "open");
        Ok(())
    }

    fn close(&mut self, target: Target) -> Result<(), PortFault> {
        tracing::debug!(%target, "close");
        Ok(())
    }
}

/// A running daemon. Dropping it shuts everything down.
pub struct Daemon {
    addr: SocketAddr,
    shared: Arc<Shared>,
    tx: Sender<LoopMsg>,
    control: Option<JoinHandle<()>>,
    server: Option<JoinHandle<()>>,
}

impl Daemon {
    pub fn spawn(config: DaemonConfig, mode: SourceMode) -> anyhow::Result<Self> {
        config.validate()?;
        let data_dir = config.data_dir();
        std::fs::create_dir_all(&data_dir).with_context(|| format!("creating {}", data_dir.display()))?;

        let (log, recovery) = EventLog::open(data_dir.join(EVENT_LOG_FILE))?;
        if recovery.discarded_bytes > 0 {
            tracing::warn!(bytes = recovery.discarded_bytes, "discarded a torn line at the end of the event log");
        }
        tracing::info!(events = recovery.events, "event log replayed");
        let store = ScheduleStore::new(data_dir.join(SCHEDULE_FILE));
        let schedule = store.load(&config.schedule)?;

        let clock = SystemClock::new();
        let boot = clock.now_ms();
        let mut controller = Controller::new(config.controller.clone(), config.bowl, schedule.schedule.clone(), boot)?;
        let (last_food, last_water, water_used) = log.scan(restore_point);
        controller.restore(last_food, last_water, water_used);
        let projection = log.scan(|evs| Projection::replay(config.controller.utc_offset_s, evs));

        let source = match &mode {
            SourceMode::Sim => Source::Sim(Box::new(LiveSim::new(
                &config.sim.world,
                (config.sim.frame_width, config.sim.frame_height),
                config.bowl,
                config.sim.seed,
                config.sim.stochastic,
            )?)),
            SourceMode::CameraDir(dir) => Source::Camera(DirCamera::new(dir)),
        };

        let listener = std::net::TcpListener::bind(config.listen).with_context(|| format!("binding {}", config.listen))?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;

        let (shutdown, _) = watch::channel(false);
        let shared = Arc::new(Shared {
            config: config.clone(),
            log,
            status: RwLock::new(projection),
            frame: RwLock::new(None),
            schedule: RwLock::new(schedule),
            started: Instant::now(),
            shutdown,
        });

        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .thread_name("feederd-io")
            .enable_all()
            .build()?;

        let (tx, rx) = mpsc::channel();
        let mirror = config.mirror_url.clone().map(|url| {
            let (mirror_tx, mirror_rx) = watch::channel(None);
            let alerts = tx.clone();
            runtime.spawn(run_mirror(
                url,
                Duration::from_secs_f64(config.mirror_timeout_s),
                mirror_rx,
                Backoff::default(),
                move |failure| {
                    let _ = alerts.send(LoopMsg::MirrorFailed(failure));
                },
            ));
            mirror_tx
        });

        let control = ControlLoop {
            shared: Arc::clone(&shared),
            controller,
            source,
            store,
            rx,
            tx: tx.clone(),
            locks: TargetLocks::new(),
            mirror,
            clock,
            in_flight: 0,
            sim: matches!(mode, SourceMode::Sim),
        };
        let control = std::thread::Builder::new()
            .name("feederd-control".into())
            .spawn(move || control.run())?;

        let router = api::router(Arc::clone(&shared), tx.clone());
        let mut stop = shared.shutdown.subscribe();
        let server = std::thread::Builder::new().name("feederd-http".into()).spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        tracing::error!("listener: {e}");
                        return;
                    }
                };
                let served = axum::serve(listener, router)
                    .with_graceful_shutdown(async move {
                        let _ = stop.wait_for(|s| *s).await;
                    })
                    .await;
                if let Err(e) = served {
                    tracing::error!("http server: {e}");
                }
            });
            runtime.shutdown_timeout(Duration::from_secs(1));
        })?;

        tracing::info!(%addr, "feederd listening");
        Ok(Self {
            addr,
            shared,
            tx,
            control: Some(control),
            server: Some(server),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shared(&self) -> &Arc<Shared> {
        &self.shared
    }

    /// Stops the control loop (letting running dispenses finish), then the
    /// HTTP server.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        let _ = self.tx.send(LoopMsg::Shutdown);
        if let Some(h) = self.control.take() {
            let _ = h.join();
        }
        self.shared.shutdown.send_replace(true);
        if let Some(h) = self.server.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Daemon {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Last dispense decision per target and water used, from the log.
fn restore_point(events: &[FeederEvent]) -> (Option<Millis>, Option<Millis>, f64) {
    let mut food = None;
    let mut water = None;
    let mut water_used = 0.0;
    for ev in events {
        if let EventBody::Dispense(d) = &ev.body {
            let slot = match d.target() {
                Target::Food => &mut food,
                Target::Water => {
                    water_used += d.dispensed;
                    &mut water
                }
            };
            *slot = Some(slot.map_or(d.requested_at, |t: Millis| t.max(d.requested_at)));
        }
    }
    (food, water, water_used)
}

struct ControlLoop {
    shared: Arc<Shared>,
    controller: Controller,
    source: Source,
    store: ScheduleStore,
    rx: Receiver<LoopMsg>,
    tx: Sender<LoopMsg>,
    locks: TargetLocks,
    mirror: Option<watch::Sender<Option<MirrorPayload>>>,
    clock: SystemClock,
    in_flight: usize,
    sim: bool,
}

impl ControlLoop {
    fn run(mut self) {
        let interval = secs_to_ms(self.shared.config.capture_interval_s).max(1);
        let mut next = self.clock.now_ms();
        loop {
            let now = self.clock.now_ms();
            if now >= next {
                self.tick(now);
                // fixed rate: skip slots that were missed entirely
                while next <= now {
                    next += interval;
                }
                continue;
            }
            match self.rx.recv_timeout(Duration::from_millis(next - now)) {
                Ok(LoopMsg::Shutdown) | Err(RecvTimeoutError::Disconnected) => break,
                Ok(msg) => self.handle(msg),
                Err(RecvTimeoutError::Timeout) => {}
            }
        }
        self.drain();
    }

    /// Waits for running dispenses so their outcomes reach the log.
    fn drain(&mut self) {
        while self.in_flight > 0 {
            match self.rx.recv_timeout(Duration::from_secs(60)) {
                Ok(msg @ LoopMsg::DispenseDone { .. }) => self.handle(msg),
                Ok(_) => {}
                Err(_) => break,
            }
        }
    }

    fn commit(&self, drafts: Vec<EventDraft>) -> Vec<FeederEvent> {
        match self.shared.log.append(drafts) {
            Ok(events) => {
                let mut status = self.shared.status.write().expect("status lock");
                for ev in &events {
                    status.apply(ev);
                }
                events
            }
            Err(e) => {
                tracing::error!("event log append failed: {e}");
                Vec::new()
            }
        }
    }

    fn tick(&mut self, now: Millis) {
        let capture = self.source.capture(now);
        let mut out = self.controller.step(capture, now);
        if let Some(captured) = out.captured.take() {
            *self.shared.frame.write().expect("frame lock") = Some(LatestFrame {
                pgm: captured.into_pgm(),
                captured_at: now,
            });
        }
        self.commit(std::mem::take(&mut out.events));
        if let (Some(mirror), Some(level)) = (&self.mirror, &out.level) {
            mirror.send_replace(Some(MirrorPayload {
                food_level: level.percent,
                presence: out.presence.is_some_and(|p| p.detected),
                timestamp: now,
            }));
        }
        for request in out.requests {
            self.start(request);
        }
    }

    fn start(&mut self, request: DispenseRequest) {
        let locks = self.locks.clone();
        let tx = self.tx.clone();
        self.in_flight += 1;
        let spawned = std::thread::Builder::new()
            .name(format!("feederd-{}", request.plan.target))
            .spawn(move || {
                let result = execute(&request.plan, &mut TimedPort, &locks, &SystemClock::new());
                let _ = tx.send(LoopMsg::DispenseDone { request, result });
            });
        if let Err(e) = spawned {
            tracing::error!("dispense worker: {e}; running inline");
            let result = execute(&request.plan, &mut TimedPort, &self.locks, &self.clock);
            self.handle(LoopMsg::DispenseDone { request, result });
        }
    }

    fn handle(&mut self, msg: LoopMsg) {
        let now = self.clock.now_ms();
        match msg {
            LoopMsg::Dispense {
                target,
                quantity,
                reply,
            } => {
                let ev = self.commit(vec![EventDraft::new(
                    now,
                    EventBody::Command(CommandRecord::ManualDispense { target, quantity }),
                )]);
                let answer = match ev.first() {
                    Some(ev) => {
                        self.controller.submit(ManualDispense {
                            command_id: ev.seq,
                            target,
                            quantity,
                        });
                        Ok(ev.seq)
                    }
                    None => Err("event log unavailable".to_string()),
                };
                let _ = reply.send(answer);
            }
            LoopMsg::ReplaceSchedule { schedule, reply } => {
                let _ = reply.send(self.replace_schedule(schedule, now));
            }
            LoopMsg::MirrorFailed(f) => {
                self.commit(vec![EventDraft::new(
                    now,
                    EventBody::Alert(AlertRecord {
                        kind: AlertKind::MirrorUnreachable,
                        message: format!(
                            "mirror push attempt {} failed: {}; retrying in {:.1}s",
                            f.attempt,
                            f.reason,
                            f.retry_in.as_secs_f64()
                        ),
                    }),
                )]);
            }
            LoopMsg::DispenseDone { request, result } => {
                self.in_flight = self.in_flight.saturating_sub(1);
                let events = self.controller.complete(&request, result, now);
                if self.sim && request.plan.target == Target::Food {
                    let dispensed: f64 = events
                        .iter()
                        .filter_map(|e| match &e.body {
                            EventBody::Dispense(d) => Some(d.dispensed),
                            _ => None,
                        })
                        .sum();
                    if let Source::Sim(sim) = &mut self.source {
                        sim.credit(dispensed);
                    }
                }
                self.commit(events);
            }
            LoopMsg::Shutdown => {}
        }
    }

    fn replace_schedule(&mut self, schedule: Schedule, now: Millis) -> Result<VersionedSchedule, ScheduleUpdateError> {
        schedule.validate()?;
        let version = self.shared.schedule.read().expect("schedule lock").version + 1;
        let stored = VersionedSchedule { version, schedule };
        self.store.save(&stored).map_err(|e| ScheduleUpdateError::Io(e.to_string()))?;
        self.controller.set_schedule(stored.schedule.clone())?;
        *self.shared.schedule.write().expect("schedule lock") = stored.clone();
        self.commit(vec![EventDraft::new(
            now,
            EventBody::Command(CommandRecord::ScheduleReplaced {
                version,
                schedule: stored.schedule.clone(),
            }),
        )]);
        Ok(stored)
    }
}
