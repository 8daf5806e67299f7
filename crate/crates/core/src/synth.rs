//! Seeded synthetic scenes: dark rectangular vehicles on a bright, noisy
//! snow-like background, with the top of each vehicle optionally buried.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::SynthConfig;
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::imaging::{round_half_up, BoundingBox, GrayImage};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub image: GrayImage,
    /// Boxes bound the painted (visible) part of each vehicle.
    pub gt: GroundTruth,
}

const MAX_ATTEMPTS: u32 = 10_000;

pub fn scene_id(index: u32) -> String {
    format!("scene_{index:04}")
}

/// Boxes that are neither overlapping nor 4-adjacent, so vehicles never merge.
fn separated(a: &BoundingBox, b: &BoundingBox) -> bool {
    a.right() < b.x as i64
        || b.right() < a.x as i64
        || a.bottom() < b.y as i64
        || b.bottom() < a.y as i64
}

/// Generate scene `index` of a seeded dataset. Each scene draws from its own
/// ChaCha8 stream so scenes are independent of how many are generated.
pub fn generate_scene(params: &SynthConfig, seed: u64, index: u32) -> Result<SyntheticScene> {
    let (w, h) = (params.width, params.height);
    if params.max_size >= w || params.max_size >= h {
        return Err(Error::InvalidParam(format!(
            "synth.max_size {} does not fit a {w}x{h} scene",
            params.max_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);

    let background = rng.random_range(params.background_min..=params.background_max);
    let mut placed: Vec<(BoundingBox, u8)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < params.vehicles as usize {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::InvalidParam(format!(
                "could not place {} separated vehicles in {w}x{h}",
                params.vehicles
            )));
        }
        let bw = rng.random_range(params.min_size..=params.max_size);
        let bh = rng.random_range(params.min_size..=params.max_size);
        let x = rng.random_range(0..=w - bw) as i32;
        let y = rng.random_range(0..=h - bh) as i32;
        let b = BoundingBox::new(x, y, bw, bh);
        if placed.iter().all(|(p, _)| separated(p, &b)) {
            let level = rng.random_range(params.vehicle_min..=params.vehicle_max);
            placed.push((b, level));
        }
    }

    let mut canvas = vec![background as f64; w as usize * h as usize];
    let mut boxes = Vec::with_capacity(placed.len());
    for (b, level) in &placed {
        let buried = round_half_up(b.h as f64 * params.occlusion).clamp(0, b.h as i64 - 1) as u32;
        let visible = BoundingBox::new(b.x, b.y + buried as i32, b.w, b.h - buried);
        for yy in visible.y..visible.bottom() as i32 {
            for xx in visible.x..visible.right() as i32 {
                canvas[yy as usize * w as usize + xx as usize] = *level as f64;
            }
        }
        boxes.push(visible);
    }

    if params.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma)
            .map_err(|e| Error::InvalidParam(format!("synth.noise_sigma: {e}")))?;
        for v in &mut canvas {
            *v += normal.sample(&mut rng);
        }
    }
    let data = canvas
        .iter()
        .map(|&v| round_half_up(v).clamp(0, 255) as u8)
        .collect();

    boxes.sort_by_key(|b| (b.y, b.x));
    Ok(SyntheticScene {
        image: GrayImage::new(w, h, data)?,
        gt: GroundTruth {
            image_id: scene_id(index),
            boxes,
            width: w,
            height: h,
        },
    })
}
