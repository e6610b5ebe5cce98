use serde::{Deserialize, Serialize};

use super::{ControllerConfig, FireLedger};
use crate::actuation::{plan_dispense, Target};
use crate::clock::Millis;
use crate::event::{AlertKind, DispenseCause};
use crate::vision::FoodStatus;
use crate::{DispensePlan, FoodLevelReading, PresenceReading};

/// Where the controller is in the teaser-then-meal protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    TeaserServed { since: Millis },
    MealServed { at: Millis },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerState {
    pub phase: Phase,
    pub last_food_dispense: Option<Millis>,
    pub last_water_dispense: Option<Millis>,
    pub last_presence: bool,
    pub fired: FireLedger,
}

impl ControllerState {
    pub fn new(started_at: Millis) -> Self {
        Self {
            phase: Phase::Idle,
            last_food_dispense: None,
            last_water_dispense: None,
            last_presence: false,
            fired: FireLedger::starting_at(started_at),
        }
    }

    pub fn note_dispense(&mut self, target: Target, at: Millis) {
        match target {
            Target::Food => self.last_food_dispense = Some(at),
            Target::Water => self.last_water_dispense = Some(at),
        }
    }

    fn food_cooldown_elapsed(&self, config: &ControllerConfig, now: Millis) -> bool {
        self.last_food_dispense
            .is_none_or(|t| now.saturating_sub(t) >= config.cooldown_ms())
    }
}

impl Default for ControllerState {
    fn default() -> Self {
        Self::new(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Dispense { plan: DispensePlan, cause: DispenseCause },
    Alert { kind: AlertKind, message: String },
}

fn food(config: &ControllerConfig, quantity: f64, cause: DispenseCause) -> Option<Action> {
    plan_dispense(Target::Food, quantity, config.food_rate)
        .ok()
        .map(|plan| Action::Dispense { plan, cause })
}

/// One decision over the latest readings. Rules in priority order:
///
/// 1. presence rising edge while idle, cooldown elapsed: teaser;
/// 2. teaser served and presence held for the engagement window: the rest
///    of the meal;
/// 3. teaser served and presence lost before the window: back to idle;
/// 4. idle, bowl low, nobody present, cooldown elapsed: refill and alert.
///
/// A served meal returns to idle once the cooldown has passed.
pub fn decide(
    state: &ControllerState,
    config: &ControllerConfig,
    level: &FoodLevelReading,
    presence: &PresenceReading,
    now: Millis,
) -> (ControllerState, Vec<Action>) {
    let mut next = state.clone();
    let mut actions = Vec::new();
    let present = presence.detected;
    let rising = present && !state.last_presence;

    if let Phase::MealServed { at } = next.phase {
        if now.saturating_sub(at) >= config.cooldown_ms() {
            next.phase = Phase::Idle;
        }
    }

    match next.phase {
        Phase::Idle if rising && next.food_cooldown_elapsed(config, now) => {
            if let Some(a) = food(config, config.teaser_quantity, DispenseCause::Teaser) {
                actions.push(a);
            }
            next.phase = Phase::TeaserServed { since: now };
            next.last_food_dispense = Some(now);
        }
        Phase::TeaserServed { since } if present => {
            if now.saturating_sub(since) >= config.engagement_window_ms() {
                let top_up = config.meal_quantity - config.teaser_quantity;
                if let Some(a) = food(config, top_up, DispenseCause::Meal) {
                    actions.push(a);
                }
                next.phase = Phase::MealServed { at: now };
                next.last_food_dispense = Some(now);
            }
        }
        Phase::TeaserServed { .. } => {
            next.phase = Phase::Idle;
        }
        Phase::Idle
            if level.status == FoodStatus::Low && !present && next.food_cooldown_elapsed(config, now) =>
        {
            if let Some(a) = food(config, config.refill_quantity, DispenseCause::Refill) {
                actions.push(a);
            }
            actions.push(Action::Alert {
                kind: AlertKind::LowFood,
                message: format!(
                    "food level {:.2}% below {:.2}%",
                    level.percent, config.low_level_threshold
                ),
            });
            next.last_food_dispense = Some(now);
        }
        _ => {}
    }

    next.last_presence = present;
    (next, actions)
}
