use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Target;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{reason}")]
pub struct PortFault {
    pub reason: String,
    /// For faults raised while holding: how long the actuator stayed open.
    pub elapsed_s: f64,
}

impl PortFault {
    pub fn new(reason: impl Into<String>) -> Self {
        Self {
            reason: reason.into(),
            elapsed_s: 0.0,
        }
    }
}

/// Hardware boundary for the food gate and the water pump. Implementations
/// are driven from one thread at a time.
pub trait ActuatorPort {
    fn open(&mut self, target: Target) -> Result<(), PortFault>;

    fn close(&mut self, target: Target) -> Result<(), PortFault>;

    /// Keeps `target` open for `seconds`. Returning an error ends the cycle
    /// early; `elapsed_s` on the fault reports the partial open time.
    fn hold(&mut self, _target: Target, seconds: f64) -> Result<(), PortFault> {
        if seconds > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(seconds));
        }
        Ok(())
    }
}

impl<P: ActuatorPort + ?Sized> ActuatorPort for &mut P {
    fn open(&mut self, target: Target) -> Result<(), PortFault> {
        (**self).open(target)
    }

    fn close(&mut self, target: Target) -> Result<(), PortFault> {
        (**self).close(target)
    }

    fn hold(&mut self, target: Target, seconds: f64) -> Result<(), PortFault> {
        (**self).hold(target, seconds)
    }
}

impl<P: ActuatorPort + ?Sized> ActuatorPort for Box<P> {
    fn open(&mut self, target: Target) -> Result<(), PortFault> {
        (**self).open(target)
    }

    fn close(&mut self, target: Target) -> Result<(), PortFault> {
        (**self).close(target)
    }

    fn hold(&mut self, target: Target, seconds: f64) -> Result<(), PortFault> {
        (**self).hold(target, seconds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PortCall {
    Open(Target),
    Close(Target),
    Hold(Target, f64),
}

/// Records every call. Clones share the same record.
#[derive(Debug, Clone, Default)]
pub struct LoggingPort {
    calls: Arc<Mutex<Vec<PortCall>>>,
    realtime: bool,
}

impl LoggingPort {
    /// Port whose `hold` returns immediately.
    pub fn new() -> Self {
        Self::default()
    }

    /// Port whose `hold` sleeps for the requested time.
    pub fn realtime() -> Self {
        Self {
            realtime: true,
            ..Self::default()
        }
    }

    pub fn calls(&self) -> Vec<PortCall> {
        self.calls.lock().unwrap().clone()
    }

    fn record(&self, call: PortCall) {
        self.calls.lock().unwrap().push(call);
    }
}

impl ActuatorPort for LoggingPort {
    fn open(&mut self, target: Target) -> Result<(), PortFault> {
        self.record(PortCall::Open(target));
        Ok(())
    }

    fn close(&mut self, target: Target) -> Result<(), PortFault> {
        self.record(PortCall::Close(target));
        Ok(())
    }

    fn hold(&mut self, target: Target, seconds: f64) -> Result<(), PortFault> {
        self.record(PortCall::Hold(target, seconds));
        if self.realtime && seconds > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(seconds));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScriptedFault {
    OnOpen(Target),
    OnClose(Target),
    /// Fails the hold after `after_s` seconds (clamped to the hold length).
    DuringHold { target: Target, after_s: f64 },
}

/// Port that injects the queued faults, each exactly once, in order of
/// matching calls.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPort {
    log: LoggingPort,
    faults: Vec<ScriptedFault>,
}

impl ScriptedPort {
    pub fn new(faults: impl IntoIterator<Item = ScriptedFault>) -> Self {
        Self {
            log: LoggingPort::new(),
            faults: faults.into_iter().collect(),
        }
    }

    pub fn calls(&self) -> Vec<PortCall> {
        self.log.calls()
    }

    pub fn pending_faults(&self) -> &[ScriptedFault] {
        &self.faults
    }

    fn take(&mut self, pred: impl Fn(&ScriptedFault) -> bool) -> Option<ScriptedFault> {
        let i = self.faults.iter().position(pred)?;
        Some(self.faults.remove(i))
    }
}

impl ActuatorPort for ScriptedPort {
    fn open(&mut self, target: Target) -> Result<(), PortFault> {
        self.log.record(PortCall::Open(target));
        match self.take(|f| *f == ScriptedFault::OnOpen(target)) {
            Some(_) => Err(PortFault::new(format!("{target} actuator rejected open"))),
            None => Ok(()),
        }
    }

    fn close(&mut self, target: Target) -> Result<(), PortFault> {
        self.log.record(PortCall::Close(target));
        match self.take(|f| *f == ScriptedFault::OnClose(target)) {
            Some(_) => Err(PortFault::new(format!("{target} actuator rejected close"))),
            None => Ok(()),
        }
    }

    fn hold(&mut self, target: Target, seconds: f64) -> Result<(), PortFault> {
        self.log.record(PortCall::Hold(target, seconds));
        match self.take(|f| matches!(f, ScriptedFault::DuringHold { target: t, .. } if *t == target)) {
            Some(ScriptedFault::DuringHold { after_s, .. }) => Err(PortFault {
                reason: format!("{target} actuator faulted while open"),
                elapsed_s: after_s.clamp(0.0, seconds.max(0.0)),
            }),
            _ => Ok(()),
        }
    }
}
