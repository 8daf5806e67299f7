//! Region augmentation: square the region box, enlarge it by area multipliers,
//! resample each box to a fixed-size patch, and add seeded random rotations.
//!
//! Random angles come from ChaCha8 seeded with the 64-bit run seed, using the
//! region id as the stream number. Each angle consumes one `u64`, converted to
//! a uniform `[0, 1)` double from its top 53 bits. Draws run in expansion
//! order, then rotation index.

use std::f64::consts::FRAC_PI_4;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::{round_half_up, BoundingBox, GrayImage};
use crate::mser::ExtremalRegion;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentParams {
    /// Area multipliers applied to the squared box.
    pub expansions: Vec<f64>,
    pub patch_side: u32,
    pub rotations_per_patch: u32,
    /// Inclusive-exclusive angle range in radians.
    pub angle_range: (f64, f64),
    pub seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            expansions: vec![1.0, 1.3, 1.6],
            patch_side: 28,
            rotations_per_patch: 4,
            angle_range: (-FRAC_PI_4, FRAC_PI_4),
            seed: 0,
        }
    }
}

impl AugmentParams {
    pub fn validate(&self) -> Result<()> {
        if self.expansions.is_empty() || self.expansions.iter().any(|&m| m.is_nan() || m < 1.0) {
            return Err(Error::InvalidParam(
                "augment.expansions must be non-empty and >= 1".into(),
            ));
        }
        if self.patch_side < 2 {
            return Err(Error::InvalidParam("augment.patch_side must be >= 2".into()));
        }
        let (lo, hi) = self.angle_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParam("augment.angle_range must be lo <= hi".into()));
        }
        Ok(())
    }

    pub fn patches_per_region(&self) -> usize {
        self.expansions.len() * (1 + self.rotations_per_patch as usize)
    }
}

/// Square of side `max(w, h)` on the same center, corner rounded half-up.
pub fn square_box(b: BoundingBox) -> BoundingBox {
    let side = b.w.max(b.h);
    recenter(b.center(), side)
}

/// Grow a square box so its area scales by `area_multiplier`.
pub fn expand_box(b: BoundingBox, area_multiplier: f64) -> BoundingBox {
    let side = round_half_up(b.w as f64 * area_multiplier.sqrt()).max(1) as u32;
    if side == b.w {
        return b;
    }
    recenter(b.center(), side)
}

fn recenter((cx, cy): (f64, f64), side: u32) -> BoundingBox {
    let half = side as f64 / 2.0;
    BoundingBox::new(
        round_half_up(cx - half) as i32,
        round_half_up(cy - half) as i32,
        side,
        side,
    )
}

/// Square raster patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub side: u32,
    pub pixels: Vec<u8>,
}

impl Patch {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.side + x) as usize]
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(self.side, self.side, self.pixels.clone())
            .expect("patch has side*side pixels")
    }
}

/// Bilinear sample at continuous coordinates, clamping to the edge pixels.
fn bilinear(src: impl Fn(i64, i64) -> u8, sx: f64, sy: f64) -> f64 {
    let x0 = sx.floor();
    let y0 = sy.floor();
    let (fx, fy) = (sx - x0, sy - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let p00 = src(x0, y0) as f64;
    let p10 = src(x0 + 1, y0) as f64;
    let p01 = src(x0, y0 + 1) as f64;
    let p11 = src(x0 + 1, y0 + 1) as f64;
    let top = p00 + (p10 - p00) * fx;
    let bot = p01 + (p11 - p01) * fx;
    top + (bot - top) * fy
}

#[inline]
fn to_u8(v: f64) -> u8 {
    round_half_up(v).clamp(0, 255) as u8
}

/// Resample the contents of `b` to a `side × side` patch (pixel-center aligned).
pub fn extract_patch(img: &GrayImage, b: BoundingBox, side: u32) -> Result<Patch> {
    if b.is_empty() {
        return Err(Error::EmptyBox(format!("{b:?}")));
    }
    if side < 2 {
        return Err(Error::InvalidParam("patch side must be >= 2".into()));
    }
    let sx = b.w as f64 / side as f64;
    let sy = b.h as f64 / side as f64;
    let mut pixels = Vec::with_capacity((side * side) as usize);
    for j in 0..side {
        let y = b.y as f64 + (j as f64 + 0.5) * sy - 0.5;
        for i in 0..side {
            let x = b.x as f64 + (i as f64 + 0.5) * sx - 0.5;
            pixels.push(to_u8(bilinear(|px, py| img.get_clamped(px, py), x, y)));
        }
    }
    Ok(Patch { side, pixels })
}

/// Rotate about the patch center; inverse mapping with bilinear sampling.
pub fn rotate_patch(patch: &Patch, angle: f64) -> Patch {
    let n = patch.side as i64;
    let c = (patch.side as f64 - 1.0) / 2.0;
    let (sin, cos) = angle.sin_cos();
    let src = |x: i64, y: i64| patch.get(x.clamp(0, n - 1) as u32, y.clamp(0, n - 1) as u32);
    let mut pixels = Vec::with_capacity(patch.pixels.len());
    for j in 0..patch.side {
        let dy = j as f64 - c;
        for i in 0..patch.side {
            let dx = i as f64 - c;
            let sx = cos * dx + sin * dy + c;
            let sy = -sin * dx + cos * dy + c;
            pixels.push(to_u8(bilinear(src, sx, sy)));
        }
    }
    Patch {
        side: patch.side,
        pixels,
    }
}

/// Seeded angle stream for one region.
pub struct AngleStream {
    rng: ChaCha8Rng,
    lo: f64,
    hi: f64,
}

impl AngleStream {
    pub fn new(seed: u64, region_id: u64, (lo, hi): (f64, f64)) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(region_id);
        Self { rng, lo, hi }
    }

    pub fn next_angle(&mut self) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.lo + (self.hi - self.lo) * u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPatch {
    pub bbox: BoundingBox,
    pub expansion: f64,
    /// 0 for the unrotated patch.
    pub angle: f64,
    pub rotation_index: u32,
    pub patch: Patch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub source_region: u64,
    pub patches: Vec<AugmentedPatch>,
}

/// Enlarged candidate boxes for a region, one per expansion multiplier.
pub fn expanded_boxes(region: &ExtremalRegion, params: &AugmentParams) -> Vec<BoundingBox> {
    let sq = square_box(region.bbox);
    params.expansions.iter().map(|&m| expand_box(sq, m)).collect()
}

pub fn augment_region(
    img: &GrayImage,
    region: &ExtremalRegion,
    region_id: u64,
    params: &AugmentParams,
) -> Result<PatchSet> {
    let mut angles = AngleStream::new(params.seed, region_id, params.angle_range);
    let mut patches = Vec::with_capacity(params.patches_per_region());
    for (&m, b) in params.expansions.iter().zip(expanded_boxes(region, params)) {
        let base = extract_patch(img, b, params.patch_side)?;
        let rotated: Vec<AugmentedPatch> = (1..=params.rotations_per_patch)
            .map(|k| {
                let angle = angles.next_angle();
                AugmentedPatch {
                    bbox: b,
                    expansion: m,
                    angle,
                    rotation_index: k,
                    patch: rotate_patch(&base, angle),
                }
            })
            .collect();
        patches.push(AugmentedPatch {
            bbox: b,
            expansion: m,
            angle: 0.0,
            rotation_index: 0,
            patch: base,
        });
        patches.extend(rotated);
    }
    Ok(PatchSet {
        source_region: region_id,
        patches,
    })
}

/// Manifest entry written next to exported patch files.
#[derive(Debug, Clone, Serialize)]
pub struct PatchManifestEntry {
    pub file: String,
    pub image: String,
    pub region: u64,
    pub expansion: f64,
    pub rotation: u32,
    pub angle: f64,
    pub bbox: BoundingBox,
}

/// File name `{image}_{region}_{expansion}_{rot}.pgm`.
pub fn patch_file_name(image: &str, region: u64, expansion: f64, rotation: u32) -> String {
    format!("{image}_{region}_{expansion:.2}_{rotation}.pgm")
}
