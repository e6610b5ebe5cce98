use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use super::{ActuationError, ActuatorCommand, ActuatorPort, CommandTrace, DispensePlan, Outcome, Target};
use crate::clock::{Clock, Millis};
use crate::num::Scalar;

/// Per-target exclusion. Clones share the same flags.
#[derive(Debug, Clone, Default)]
pub struct TargetLocks {
    flags: [Arc<AtomicBool>; 2],
}

/// Releases its target on drop.
#[derive(Debug)]
pub struct TargetGuard {
    flag: Arc<AtomicBool>,
    target: Target,
}

impl TargetGuard {
    pub fn target(&self) -> Target {
        self.target
    }
}

impl Drop for TargetGuard {
    fn drop(&mut self) {
        self.flag.store(false, Ordering::Release);
    }
}

impl TargetLocks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn try_acquire(&self, target: Target) -> Result<TargetGuard, ActuationError> {
        let flag = &self.flags[target as usize];
        flag.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map_err(|_| ActuationError::Busy(target))?;
        Ok(TargetGuard {
            flag: Arc::clone(flag),
            target,
        })
    }

    pub fn is_busy(&self, target: Target) -> bool {
        self.flags[target as usize].load(Ordering::Acquire)
    }
}

/// An in-flight dispense holding its target's lock. Obtained from
/// [`begin`]; must be ended with [`DispenseCycle::finish`], which issues the
/// close when an open was issued.
#[derive(Debug)]
pub struct DispenseCycle<S> {
    plan: DispensePlan<S>,
    _guard: TargetGuard,
    commands: Vec<ActuatorCommand<S>>,
    started_at: Millis,
    open_issued: bool,
    held: bool,
    abort: Option<String>,
}

/// Takes the target lock and issues the open. Zero-duration plans issue
/// nothing.
pub fn begin<S: Scalar, P: ActuatorPort>(
    plan: &DispensePlan<S>,
    port: &mut P,
    locks: &TargetLocks,
    now: Millis,
) -> Result<DispenseCycle<S>, ActuationError> {
    let guard = locks.try_acquire(plan.target)?;
    let mut cycle = DispenseCycle {
        plan: *plan,
        _guard: guard,
        commands: Vec::with_capacity(3),
        started_at: now,
        open_issued: false,
        held: false,
        abort: None,
    };
    if plan.duration_s > S::zero() {
        cycle.commands.push(ActuatorCommand::open(plan.target));
        cycle.open_issued = true;
        if let Err(fault) = port.open(plan.target) {
            cycle.abort = Some(format!("open failed: {fault}"));
        }
    }
    Ok(cycle)
}

impl<S: Scalar> DispenseCycle<S> {
    pub fn plan(&self) -> &DispensePlan<S> {
        &self.plan
    }

    pub fn started_at(&self) -> Millis {
        self.started_at
    }

    pub fn is_aborted(&self) -> bool {
        self.abort.is_some()
    }

    /// Whether the actuator is (nominally) open right now.
    pub fn is_open(&self) -> bool {
        self.open_issued && self.abort.is_none()
    }

    /// Holds the actuator open for the plan duration and returns the time
    /// it was actually open. Does nothing on cycles that are not open or
    /// were already held.
    pub fn hold<P: ActuatorPort>(&mut self, port: &mut P) -> S {
        if !self.is_open() || self.held {
            return S::zero();
        }
        self.held = true;
        let duration = self.plan.duration_s;
        let held = match port.hold(self.plan.target, duration.to_f64_lossy()) {
            Ok(()) => duration,
            Err(fault) => {
                self.abort = Some(format!("fault while open: {fault}"));
                S::lit(fault.elapsed_s).max(S::zero()).min(duration)
            }
        };
        self.commands.push(ActuatorCommand::Wait { seconds: held });
        held
    }

    /// Issues the close (if an open was issued) and releases the target.
    pub fn finish<P: ActuatorPort>(mut self, port: &mut P, now: Millis) -> CommandTrace<S> {
        if self.open_issued {
            self.commands.push(ActuatorCommand::close(self.plan.target));
            if let Err(fault) = port.close(self.plan.target) {
                let msg = format!("close failed: {fault}");
                self.abort = Some(match self.abort.take() {
                    Some(prev) => format!("{prev}; {msg}"),
                    None => msg,
                });
            }
        }
        CommandTrace {
            commands: std::mem::take(&mut self.commands),
            started_at: self.started_at,
            finished_at: now.max(self.started_at),
            outcome: match self.abort.take() {
                Some(reason) => Outcome::Aborted { reason },
                None => Outcome::Completed,
            },
        }
    }
}

/// Runs a full cycle, blocking for as long as the port holds. Returns
/// `Busy` when the target is already dispensing; port faults end up in the
/// trace outcome.
pub fn execute<S: Scalar, P: ActuatorPort>(
    plan: &DispensePlan<S>,
    port: &mut P,
    locks: &TargetLocks,
    clock: &dyn Clock,
) -> Result<CommandTrace<S>, ActuationError> {
    let mut cycle = begin(plan, port, locks, clock.now_ms())?;
    cycle.hold(port);
    Ok(cycle.finish(port, clock.now_ms()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::{plan_dispense, Duty, LoggingPort, PortCall, ScriptedFault, ScriptedPort};
    use crate::clock::VirtualClock;

    #[test]
    fn food_cycle_matches_duty_sequence() {
        let plan = plan_dispense(Target::Food, 20.0, 10.0).unwrap();
        let mut port = LoggingPort::new();
        let trace = execute(&plan, &mut port, &TargetLocks::new(), &VirtualClock::new(0)).unwrap();
        assert_eq!(
            trace.commands,
            vec![
                ActuatorCommand::FoodValve { duty_percent: Duty::Open },
                ActuatorCommand::Wait { seconds: 2.0 },
                ActuatorCommand::FoodValve {
                    duty_percent: Duty::Closed
                },
            ]
        );
        assert_eq!(trace.outcome, Outcome::Completed);
        assert_eq!(
            port.calls(),
            vec![
                PortCall::Open(Target::Food),
                PortCall::Hold(Target::Food, 2.0),
                PortCall::Close(Target::Food)
            ]
        );
    }

    #[test]
    fn zero_plan_is_noop() {
        let plan = plan_dispense(Target::Water, 0.0, 10.0).unwrap();
        let mut port = LoggingPort::new();
        let trace = execute(&plan, &mut port, &TargetLocks::new(), &VirtualClock::new(0)).unwrap();
        assert!(trace.commands.is_empty());
        assert!(trace.is_completed());
        assert!(port.calls().is_empty());
    }

    #[test]
    fn fault_while_open_forces_close_and_credits_partial() {
        let plan = plan_dispense(Target::Food, 30.0, 10.0).unwrap();
        let mut port = ScriptedPort::new([ScriptedFault::DuringHold {
            target: Target::Food,
            after_s: 1.25,
        }]);
        let trace = execute(&plan, &mut port, &TargetLocks::new(), &VirtualClock::new(0)).unwrap();
        assert_eq!(
            trace.commands.last(),
            Some(&ActuatorCommand::FoodValve {
                duty_percent: Duty::Closed
            })
        );
        assert!(matches!(trace.outcome, Outcome::Aborted { .. }));
        assert!(trace.is_balanced());
        assert_eq!(plan.credited(&trace), 12.5);
    }

    #[test]
    fn open_fault_still_closes() {
        let plan = plan_dispense(Target::Water, 30.0, 10.0).unwrap();
        let mut port = ScriptedPort::new([ScriptedFault::OnOpen(Target::Water)]);
        let trace = execute(&plan, &mut port, &TargetLocks::new(), &VirtualClock::new(0)).unwrap();
        assert_eq!(
            trace.commands,
            vec![ActuatorCommand::WaterPump { on: true }, ActuatorCommand::WaterPump { on: false }]
        );
        assert!(!trace.is_completed());
        assert_eq!(plan.credited(&trace), 0.0);
        assert_eq!(port.calls(), vec![PortCall::Open(Target::Water), PortCall::Close(Target::Water)]);
    }

    #[test]
    fn close_fault_is_reported() {
        let plan = plan_dispense(Target::Food, 10.0, 10.0).unwrap();
        let mut port = ScriptedPort::new([ScriptedFault::OnClose(Target::Food)]);
        let trace = execute(&plan, &mut port, &TargetLocks::new(), &VirtualClock::new(0)).unwrap();
        assert!(matches!(&trace.outcome, Outcome::Aborted { reason } if reason.contains("close")));
        assert!(trace.is_balanced());
    }

    #[test]
    fn busy_while_cycle_in_flight() {
        let locks = TargetLocks::new();
        let plan = plan_dispense(Target::Food, 10.0, 10.0).unwrap();
        let mut port = LoggingPort::new();
        let cycle = begin(&plan, &mut port, &locks, 0).unwrap();
        assert_eq!(
            begin(&plan, &mut port, &locks, 1).unwrap_err(),
            ActuationError::Busy(Target::Food)
        );
        let water = plan_dispense(Target::Water, 10.0, 10.0).unwrap();
        assert!(begin(&water, &mut port, &locks, 1).is_ok());
        cycle.finish(&mut port, 2);
        assert!(!locks.is_busy(Target::Food));
    }
}
