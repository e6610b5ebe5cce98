use super::{BowlRenderer, SimError, WorldParams, WorldState};
use crate::clock::{ms_to_secs, Millis};
use crate::control::{CaptureError, Captured, FrameSource};
use crate::vision::BowlRegion;

/// Simulated world advanced by whatever clock drives the captures. Used
/// by the daemon's simulator mode.
#[derive(Debug, Clone)]
pub struct LiveSim {
    world: WorldState,
    renderer: BowlRenderer,
    last_ms: Option<Millis>,
    pending: f64,
}

impl LiveSim {
    pub fn new(
        params: &WorldParams,
        frame_size: (u32, u32),
        bowl: BowlRegion,
        seed: u64,
        stochastic: bool,
    ) -> Result<Self, SimError> {
        params.validate().map_err(SimError::ScenarioInvalid)?;
        Ok(Self {
            world: WorldState::new(params, seed, stochastic),
            renderer: BowlRenderer::new(frame_size.0, frame_size.1, bowl, seed ^ 0x5eed)?,
            last_ms: None,
            pending: 0.0,
        })
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut WorldState {
        &mut self.world
    }

    /// Food released into the bowl; lands on the next advance.
    pub fn credit(&mut self, grams: f64) {
        self.pending += grams.max(0.0);
    }

    pub fn advance_to(&mut self, now: Millis) {
        let dt = match self.last_ms {
            Some(last) if now > last => ms_to_secs(now - last),
            _ => 0.0,
        };
        self.last_ms = Some(self.last_ms.map_or(now, |l| l.max(now)));
        self.world.step(dt, std::mem::take(&mut self.pending));
    }

    pub fn capture_at(&mut self, now: Millis) -> Captured {
        self.advance_to(now);
        Captured::new(self.renderer.render(&self.world))
    }
}

impl FrameSource for LiveSim {
    fn capture(&mut self, now: Millis) -> Result<Captured, CaptureError> {
        Ok(self.capture_at(now))
    }
}
