use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::actuation::Target;
use crate::clock::Millis;

pub const SECONDS_PER_DAY: u32 = 86_400;
const MS_PER_DAY: i64 = SECONDS_PER_DAY as i64 * 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    /// Seconds since local midnight.
    pub time_of_day: u32,
    pub quantity: f64,
}

/// Daily dispense times. `entries` are food (grams), `water_entries`
/// water (millilitres).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(default)]
    pub entries: Vec<ScheduleEntry>,
    #[serde(default)]
    pub water_entries: Vec<ScheduleEntry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("{target} entry at {time_of_day}s is outside [0, 86400)")]
    OutOfRange { target: Target, time_of_day: u32 },
    #[error("{target} entries are not sorted by time of day")]
    Unsorted { target: Target },
    #[error("duplicate {target} entry at {time_of_day}s")]
    Duplicate { target: Target, time_of_day: u32 },
    #[error("{target} entry at {time_of_day}s has invalid quantity {quantity}")]
    InvalidQuantity {
        target: Target,
        time_of_day: u32,
        quantity: f64,
    },
}

impl Schedule {
    pub fn for_target(&self, target: Target) -> &[ScheduleEntry] {
        match target {
            Target::Food => &self.entries,
            Target::Water => &self.water_entries,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.water_entries.is_empty()
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        for target in Target::ALL {
            let entries = self.for_target(target);
            for e in entries {
                if e.time_of_day >= SECONDS_PER_DAY {
                    return Err(ScheduleError::OutOfRange {
                        target,
                        time_of_day: e.time_of_day,
                    });
                }
                if !(e.quantity.is_finite() && e.quantity >= 0.0) {
                    return Err(ScheduleError::InvalidQuantity {
                        target,
                        time_of_day: e.time_of_day,
                        quantity: e.quantity,
                    });
                }
            }
            for pair in entries.windows(2) {
                if pair[0].time_of_day == pair[1].time_of_day {
                    return Err(ScheduleError::Duplicate {
                        target,
                        time_of_day: pair[0].time_of_day,
                    });
                }
                if pair[0].time_of_day > pair[1].time_of_day {
                    return Err(ScheduleError::Unsorted { target });
                }
            }
        }
        Ok(())
    }
}

/// Identifies a schedule entry across schedule replacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntryKey {
    pub target: Target,
    pub time_of_day: u32,
}

/// When each entry last fired, plus the earliest occurrence still eligible
/// (occurrences before start-up are not back-filled).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FireLedger {
    pub not_before: Millis,
    pub last_fired: BTreeMap<EntryKey, Millis>,
}

impl FireLedger {
    pub fn starting_at(not_before: Millis) -> Self {
        Self {
            not_before,
            last_fired: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, fire: &ScheduledFire) {
        self.last_fired.insert(fire.key, fire.occurrence);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledFire {
    pub key: EntryKey,
    pub entry: ScheduleEntry,
    /// Today's occurrence of the entry.
    pub occurrence: Millis,
}

/// Start of the local day containing `now`.
pub fn day_start(now: Millis, utc_offset_s: i64) -> i64 {
    let local = now as i64 + utc_offset_s * 1000;
    local.div_euclid(MS_PER_DAY) * MS_PER_DAY - utc_offset_s * 1000
}

/// The earliest entry whose occurrence today is due (`<= now`), not before
/// the ledger's start, and not yet fired. Call repeatedly (recording each
/// fire) to drain all due entries.
pub fn next_scheduled_fire(
    schedule: &Schedule,
    ledger: &FireLedger,
    now: Millis,
    utc_offset_s: i64,
) -> Option<ScheduledFire> {
    let start = day_start(now, utc_offset_s);
    Target::ALL
        .into_iter()
        .flat_map(|target| schedule.for_target(target).iter().map(move |e| (target, e)))
        .filter_map(|(target, entry)| {
            let occ = start + entry.time_of_day as i64 * 1000;
            if occ < 0 {
                return None;
            }
            let occurrence = occ as Millis;
            let key = EntryKey {
                target,
                time_of_day: entry.time_of_day,
            };
            let fresh = ledger.last_fired.get(&key).is_none_or(|&last| last < occurrence);
            (occurrence <= now && occurrence >= ledger.not_before && fresh).then_some(ScheduledFire {
                key,
                entry: *entry,
                occurrence,
            })
        })
        .min_by_key(|f| (f.occurrence, f.key))
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: u32 = 3600;

    fn at(h: u32, m: u32, s: u32) -> Millis {
        (h * H + m * 60 + s) as Millis * 1000
    }

    fn food(times: &[u32]) -> Schedule {
        Schedule {
            entries: times
                .iter()
                .map(|&t| ScheduleEntry {
                    time_of_day: t,
                    quantity: 10.0,
                })
                .collect(),
            water_entries: vec![],
        }
    }

    #[test]
    fn empty_schedule_never_fires() {
        assert!(next_scheduled_fire(&Schedule::default(), &FireLedger::default(), at(12, 0, 0), 0).is_none());
    }

    #[test]
    fn fires_once_per_day() {
        let s = food(&[8 * H]);
        let mut ledger = FireLedger::default();
        let fire = next_scheduled_fire(&s, &ledger, at(8, 0, 5), 0).unwrap();
        assert_eq!(fire.occurrence, at(8, 0, 0));
        ledger.record(&fire);
        assert!(next_scheduled_fire(&s, &ledger, at(9, 0, 0), 0).is_none());
        // Next day it is due again.
        let tomorrow = at(8, 0, 0) + 86_400_000;
        assert!(next_scheduled_fire(&s, &ledger, tomorrow, 0).is_some());
    }

    #[test]
    fn not_back_filled_before_start() {
        let s = food(&[8 * H]);
        let ledger = FireLedger::starting_at(at(9, 0, 0));
        assert!(next_scheduled_fire(&s, &ledger, at(9, 0, 2), 0).is_none());
    }

    #[test]
    fn earliest_first() {
        let mut s = food(&[7 * H, 8 * H]);
        s.water_entries.push(ScheduleEntry {
            time_of_day: 6 * H,
            quantity: 50.0,
        });
        let mut ledger = FireLedger::default();
        let mut order = vec![];
        while let Some(f) = next_scheduled_fire(&s, &ledger, at(9, 0, 0), 0) {
            ledger.record(&f);
            order.push(f.key);
        }
        assert_eq!(
            order.iter().map(|k| (k.target, k.time_of_day)).collect::<Vec<_>>(),
            vec![(Target::Water, 6 * H), (Target::Food, 7 * H), (Target::Food, 8 * H)]
        );
    }

    #[test]
    fn utc_offset_shifts_the_day() {
        // 08:00 local at UTC+2 is 06:00 UTC.
        let s = food(&[8 * H]);
        let ledger = FireLedger::default();
        assert!(next_scheduled_fire(&s, &ledger, at(5, 59, 59), 7200).is_none());
        assert!(next_scheduled_fire(&s, &ledger, at(6, 0, 0), 7200).is_some());
    }

    #[test]
    fn validation() {
        assert!(Schedule::default().validate().is_ok());
        assert!(matches!(food(&[10, 10]).validate(), Err(ScheduleError::Duplicate { .. })));
        assert!(matches!(food(&[20, 10]).validate(), Err(ScheduleError::Unsorted { .. })));
        assert!(matches!(food(&[86_400]).validate(), Err(ScheduleError::OutOfRange { .. })));
        let mut s = food(&[10]);
        s.entries[0].quantity = -1.0;
        assert!(s.validate().is_err());
        // Same time for food and water is fine.
        let mut s = food(&[10]);
        s.water_entries.push(ScheduleEntry {
            time_of_day: 10,
            quantity: 1.0,
        });
        assert!(s.validate().is_ok());
    }
}
