//! Current-state projection served by `GET /status`.

use feeder_core::actuation::Target;
use feeder_core::clock::Millis;
use feeder_core::control::day_start;
use feeder_core::event::{DispenseCause, DispenseResult, EventBody, FeederEvent};
use feeder_core::vision::FoodStatus;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispenseSummary {
    pub seq: u64,
    pub ts: Millis,
    pub target: Target,
    pub quantity: f64,
    pub dispensed: f64,
    pub cause: DispenseCause,
    pub result: DispenseResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSnapshot {
    /// Latest food level; `None` until the first frame since boot.
    pub food_percent: Option<f64>,
    pub food_status: Option<FoodStatus>,
    pub presence: bool,
    pub camera_available: Option<bool>,
    pub last_reading_at: Option<Millis>,
    pub water_dispensed_today: f64,
    pub food_dispensed_total: f64,
    pub water_dispensed_total: f64,
    pub dispense_count: u64,
    pub last_dispense: Option<DispenseSummary>,
    pub schedule_version: u64,
    pub last_seq: u64,
    pub uptime_s: f64,
}

/// Folds events into counters. Readings only reflect this boot.
#[derive(Debug, Clone, Default)]
pub struct Projection {
    utc_offset_s: i64,
    food_percent: Option<f64>,
    food_status: Option<FoodStatus>,
    presence: bool,
    camera_available: Option<bool>,
    last_reading_at: Option<Millis>,
    food_total: f64,
    water_total: f64,
    water_day: Option<(i64, f64)>,
    dispense_count: u64,
    last_dispense: Option<DispenseSummary>,
    last_seq: u64,
}

impl Projection {
    pub fn new(utc_offset_s: i64) -> Self {
        Self {
            utc_offset_s,
            ..Self::default()
        }
    }

    /// Replays a log: counters are kept, readings cleared.
    pub fn replay(utc_offset_s: i64, events: &[FeederEvent]) -> Self {
        let mut p = Self::new(utc_offset_s);
        for ev in events {
            p.apply(ev);
        }
        p.food_percent = None;
        p.food_status = None;
        p.presence = false;
        p.camera_available = None;
        p.last_reading_at = None;
        p
    }

    pub fn apply(&mut self, ev: &FeederEvent) {
        self.last_seq = self.last_seq.max(ev.seq);
        match &ev.body {
            EventBody::FoodLevel(r) => {
                self.food_percent = Some(r.percent);
                self.food_status = Some(r.status);
                self.camera_available = Some(true);
                self.last_reading_at = Some(r.timestamp);
            }
            EventBody::Presence(p) => self.presence = p.detected,
            EventBody::CameraUnavailable { .. } => self.camera_available = Some(false),
            EventBody::Dispense(d) => {
                if matches!(d.result, DispenseResult::Busy) {
                    return;
                }
                match d.target() {
                    Target::Food => self.food_total += d.dispensed,
                    Target::Water => {
                        self.water_total += d.dispensed;
                        let day = day_start(ev.ts, self.utc_offset_s);
                        match &mut self.water_day {
                            Some((d0, amount)) if *d0 == day => *amount += d.dispensed,
                            _ => self.water_day = Some((day, d.dispensed)),
                        }
                    }
                }
                self.dispense_count += 1;
                self.last_dispense = Some(DispenseSummary {
                    seq: ev.seq,
                    ts: ev.ts,
                    target: d.target(),
                    quantity: d.plan.quantity,
                    dispensed: d.dispensed,
                    cause: d.cause,
                    result: d.result.clone(),
                    command_id: d.command_id,
                });
            }
            EventBody::Alert(_) | EventBody::Command(_) => {}
        }
    }

    pub fn water_dispensed_today(&self, now: Millis) -> f64 {
        match self.water_day {
            Some((day, amount)) if day == day_start(now, self.utc_offset_s) => amount,
            _ => 0.0,
        }
    }

    pub fn snapshot(&self, now: Millis, schedule_version: u64, uptime_s: f64) -> StatusSnapshot {
        StatusSnapshot {
            food_percent: self.food_percent,
            food_status: self.food_status,
            presence: self.presence,
            camera_available: self.camera_available,
            last_reading_at: self.last_reading_at,
            water_dispensed_today: self.water_dispensed_today(now),
            food_dispensed_total: self.food_total,
            water_dispensed_total: self.water_total,
            dispense_count: self.dispense_count,
            last_dispense: self.last_dispense.clone(),
            schedule_version,
            last_seq: self.last_seq,
            uptime_s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use feeder_core::actuation::plan_dispense;
    use feeder_core::event::{DispenseRecord, EventDraft};

    fn water(seq: u64, ts: Millis, ml: f64) -> FeederEvent {
        EventDraft::new(
            ts,
            EventBody::Dispense(DispenseRecord {
                plan: plan_dispense(Target::Water, ml, 10.0).unwrap(),
                cause: DispenseCause::Manual,
                command_id: None,
                requested_at: ts,
                result: DispenseResult::Completed,
                dispensed: ml,
                trace: None,
            }),
        )
        .commit(seq)
    }

    #[test]
    fn water_today_rolls_over_at_local_midnight() {
        let day = 86_400_000;
        let mut p = Projection::new(0);
        p.apply(&water(1, day - 1000, 50.0));
        p.apply(&water(2, day + 1000, 20.0));
        p.apply(&water(3, day + 2000, 5.0));
        assert_eq!(p.water_dispensed_today(day + 5000), 25.0);
        assert_eq!(p.water_dispensed_today(2 * day + 5000), 0.0);
        let s = p.snapshot(day + 5000, 0, 0.0);
        assert_eq!(s.water_dispensed_total, 75.0);
        assert_eq!(s.dispense_count, 3);
        assert_eq!(s.last_dispense.unwrap().seq, 3);
        assert_eq!(s.food_percent, None);
    }
}
