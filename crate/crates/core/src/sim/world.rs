use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

fn d_capacity() -> f64 {
    150.0
}
fn d_initial() -> f64 {
    60.0
}
fn d_eating() -> f64 {
    0.5
}
fn d_arrivals() -> f64 {
    1.0
}
fn d_visit() -> f64 {
    120.0
}

/// Initial conditions and behaviour constants of the simulated bowl and pet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    /// Grams that fill the bowl to the brim.
    #[serde(default = "d_capacity")]
    pub bowl_capacity: f64,
    #[serde(default = "d_initial")]
    pub initial_food: f64,
    /// Grams per second eaten while the pet is at the bowl.
    #[serde(default = "d_eating")]
    pub eating_rate: f64,
    /// Expected pet arrivals per hour (stochastic mode).
    #[serde(default = "d_arrivals")]
    pub arrival_rate: f64,
    /// Mean visit length in seconds (stochastic mode).
    #[serde(default = "d_visit")]
    pub visit_duration_mean: f64,
    #[serde(default)]
    pub pet_present: bool,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            bowl_capacity: d_capacity(),
            initial_food: d_initial(),
            eating_rate: d_eating(),
            arrival_rate: d_arrivals(),
            visit_duration_mean: d_visit(),
            pet_present: false,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.bowl_capacity.is_finite() && self.bowl_capacity > 0.0) {
            return Err(format!("bowl_capacity {} must be positive", self.bowl_capacity));
        }
        if !(0.0..=self.bowl_capacity).contains(&self.initial_food) {
            return Err(format!("initial_food {} outside [0, capacity]", self.initial_food));
        }
        for (name, v) in [
            ("eating_rate", self.eating_rate),
            ("arrival_rate", self.arrival_rate),
            ("visit_duration_mean", self.visit_duration_mean),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} {v} must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// Bowl and pet. Mass bookkeeping keeps
/// `food_mass = initial + dispensed - eaten - overflow` exact up to
/// floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub food_mass: f64,
    pub bowl_capacity: f64,
    pub pet_present: bool,
    pub sim_time: f64,
    pub eating_rate: f64,
    pub arrival_rate: f64,
    pub visit_duration_mean: f64,
    /// Random arrivals and departures; off when a script drives the pet.
    pub stochastic: bool,
    pub total_dispensed: f64,
    pub total_eaten: f64,
    /// Food that did not fit in the bowl.
    pub total_overflow: f64,
    /// Steps where the bowl ran empty or overflowed.
    pub clamp_events: u64,
    /// Times the pet arrived, in seconds.
    pub arrivals: Vec<f64>,
    next_transition: Option<f64>,
    rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(params: &WorldParams, seed: u64, stochastic: bool) -> Self {
        Self {
            food_mass: params.initial_food.clamp(0.0, params.bowl_capacity),
            bowl_capacity: params.bowl_capacity,
            pet_present: params.pet_present,
            sim_time: 0.0,
            eating_rate: params.eating_rate,
            arrival_rate: params.arrival_rate,
            visit_duration_mean: params.visit_duration_mean,
            stochastic,
            total_dispensed: 0.0,
            total_eaten: 0.0,
            total_overflow: 0.0,
            clamp_events: 0,
            arrivals: if params.pet_present { vec![0.0] } else { vec![] },
            next_transition: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn fill_fraction(&self) -> f64 {
        (self.food_mass / self.bowl_capacity).clamp(0.0, 1.0)
    }

    pub fn set_pet_present(&mut self, present: bool) {
        if present && !self.pet_present {
            self.arrivals.push(self.sim_time);
        }
        self.pet_present = present;
        self.next_transition = None;
    }

    /// Overwrites the bowl contents (clamped to the bowl).
    pub fn set_food_mass(&mut self, grams: f64) {
        self.food_mass = grams.clamp(0.0, self.bowl_capacity);
    }

    fn sample_transition(&mut self) -> Option<f64> {
        let rate_per_s = if self.pet_present {
            if self.visit_duration_mean > 0.0 {
                1.0 / self.visit_duration_mean
            } else {
                f64::INFINITY
            }
        } else {
            self.arrival_rate / 3600.0
        };
        if rate_per_s <= 0.0 {
            return None;
        }
        if rate_per_s.is_infinite() {
            return Some(self.sim_time);
        }
        let exp = Exp::new(rate_per_s).ok()?;
        Some(self.sim_time + exp.sample(&mut self.rng))
    }

    fn advance_mass(&mut self, dt: f64, dispensed: f64) {
        let demand = if self.pet_present && self.food_mass > 0.0 {
            self.eating_rate * dt
        } else {
            0.0
        };
        let raw = self.food_mass + dispensed - demand;
        self.total_dispensed += dispensed;
        if raw < 0.0 {
            self.total_eaten += self.food_mass + dispensed;
            self.food_mass = 0.0;
            self.clamp_events += 1;
        } else if raw > self.bowl_capacity {
            self.total_eaten += demand;
            self.total_overflow += raw - self.bowl_capacity;
            self.food_mass = self.bowl_capacity;
            self.clamp_events += 1;
        } else {
            self.total_eaten += demand;
            self.food_mass = raw;
        }
        self.sim_time += dt;
    }

    /// Adds `dispensed` grams, then lets `dt` seconds pass.
    pub fn step(&mut self, dt: f64, dispensed: f64) {
        let dt = dt.max(0.0);
        let dispensed = dispensed.max(0.0);
        if !self.stochastic {
            self.advance_mass(dt, dispensed);
            return;
        }
        let end = self.sim_time + dt;
        let mut pending = dispensed;
        loop {
            if self.next_transition.is_none() {
                self.next_transition = self.sample_transition();
            }
            match self.next_transition {
                Some(at) if at <= end => {
                    self.advance_mass((at - self.sim_time).max(0.0), pending);
                    pending = 0.0;
                    let present = !self.pet_present;
                    self.set_pet_present(present);
                }
                _ => {
                    self.advance_mass((end - self.sim_time).max(0.0), pending);
                    self.sim_time = end;
                    return;
                }
            }
        }
    }
}

/// Value-returning form of [`WorldState::step`].
pub fn world_step(world: &WorldState, dt: f64, dispensed: f64) -> WorldState {
    let mut next = world.clone();
    next.step(dt, dispensed);
    next
}
