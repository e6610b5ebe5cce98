use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SimError, WorldState};
use crate::vision::{build_mask, BowlRegion, Frame, Mask};

/// Intensity of food pixels and of the pet.
pub const DARK_INTENSITY: u8 = 20;
/// Intensity of the empty bowl and the surroundings.
pub const LIGHT_INTENSITY: u8 = 200;
/// Minimum share of the frame covered by the pet when present.
pub const PET_BLOB_FRACTION: f64 = 0.06;

/// Renders bowl frames for one camera geometry. The order in which bowl
/// pixels darken is a fixed seeded permutation, so a change in food mass
/// only flips the pixels for the difference.
#[derive(Debug, Clone)]
pub struct BowlRenderer {
    width: u32,
    height: u32,
    mask: Mask,
    fill_order: Vec<usize>,
    blob: Vec<usize>,
}

impl BowlRenderer {
    pub fn new(width: u32, height: u32, region: BowlRegion, seed: u64) -> Result<Self, SimError> {
        let mask = build_mask(width, height, region)?;
        let mut fill_order: Vec<usize> = mask.indices().collect();
        fill_order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

        let total = width as usize * height as usize;
        let blob_len = (PET_BLOB_FRACTION * total as f64).ceil() as usize;
        let mut in_mask = vec![false; total];
        for i in mask.indices() {
            in_mask[i] = true;
        }
        let blob: Vec<usize> = (0..total).filter(|&i| !in_mask[i]).take(blob_len).collect();
        if blob.len() < blob_len {
            return Err(SimError::ScenarioInvalid(format!(
                "bowl covers too much of the {width}x{height} frame to fit a pet outside it"
            )));
        }
        Ok(Self {
            width,
            height,
            mask,
            fill_order,
            blob,
        })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    /// Number of bowl pixels drawn dark for `world`.
    pub fn dark_count(&self, world: &WorldState) -> usize {
        (world.fill_fraction() * self.mask.count() as f64).round() as usize
    }

    pub fn render(&self, world: &WorldState) -> Frame {
        let mut pixels = vec![LIGHT_INTENSITY; self.width as usize * self.height as usize];
        for &i in &self.fill_order[..self.dark_count(world)] {
            pixels[i] = DARK_INTENSITY;
        }
        if world.pet_present {
            for &i in &self.blob {
                pixels[i] = DARK_INTENSITY;
            }
        }
        Frame::new(self.width, self.height, pixels).expect("renderer dimensions are valid")
    }
}

/// One-shot rendering; prefer [`BowlRenderer`] for sequences of frames.
pub fn render_bowl_frame(
    world: &WorldState,
    frame_size: (u32, u32),
    region: BowlRegion,
    seed: u64,
) -> Result<Frame, SimError> {
    Ok(BowlRenderer::new(frame_size.0, frame_size.1, region, seed)?.render(world))
}
