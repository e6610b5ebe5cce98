use serde::{Deserialize, Serialize};

use super::{ActuationError, CommandTrace, Target};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispensePlan<S> {
    pub target: Target,
    /// Grams for food, millilitres for water.
    pub quantity: S,
    /// Units released per second of open actuator.
    pub rate: S,
    pub duration_s: S,
}

impl<S: Scalar> DispensePlan<S> {
    /// Amount actually released over the open time recorded in `trace`.
    pub fn credited(&self, trace: &CommandTrace<S>) -> S {
        self.rate * trace.open_seconds()
    }
}

/// Open time needed to release `quantity` at `rate`: `T = quantity / rate`.
pub fn plan_dispense<S: Scalar>(target: Target, quantity: S, rate: S) -> Result<DispensePlan<S>, ActuationError> {
    if !(rate > S::zero()) || !rate.is_finite() {
        return Err(ActuationError::InvalidRate(rate.to_f64_lossy()));
    }
    if !(quantity >= S::zero()) || !quantity.is_finite() {
        return Err(ActuationError::NegativeQuantity(quantity.to_f64_lossy()));
    }
    Ok(DispensePlan {
        target,
        quantity,
        rate,
        duration_s: quantity / rate,
    })
}
