//! Multiresolution MSER: detect on every pyramid level, map to the base frame,
//! and drop coarse-scale duplicates of finer detections.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{map_box_to_base, ImagePyramid};
use crate::mser::{detect_mser, ExtremalRegion, MserParams};

#[derive(Debug, Clone, PartialEq)]
pub struct MrMserParams {
    pub mser: MserParams,
    /// Cross-scale duplicates at or above this bbox IoU are merged.
    pub dedup_iou: f64,
}

impl Default for MrMserParams {
    fn default() -> Self {
        Self {
            mser: MserParams::default(),
            dedup_iou: 0.7,
        }
    }
}

impl MrMserParams {
    pub fn validate(&self) -> Result<()> {
        self.mser.validate()?;
        if !(self.dedup_iou > 0.0 && self.dedup_iou <= 1.0) {
            return Err(Error::InvalidParam("mrmser.dedup_iou must be in (0,1]".into()));
        }
        Ok(())
    }
}

/// Lift a level-`k` region to the base frame by pixel replication.
pub fn lift_region(region: &ExtremalRegion, k: u32) -> ExtremalRegion {
    let pixels = region.pixels.scaled(1 << k);
    ExtremalRegion {
        area: pixels.area(),
        bbox: map_box_to_base(region.bbox, k),
        pixels,
        scale_level: k,
        ..region.clone()
    }
}

/// Per-level detections, already lifted to the base frame.
pub fn detect_per_level(pyr: &ImagePyramid, params: &MrMserParams) -> Vec<Vec<ExtremalRegion>> {
    pyr.levels
        .par_iter()
        .enumerate()
        .map(|(k, img)| {
            detect_mser(img, &params.mser)
                .iter()
                .map(|r| lift_region(r, k as u32))
                .collect()
        })
        .collect()
}

/// Merge lifted per-level detections, finest level first.
///
/// A region from level `k > 0` is dropped when its bbox overlaps a kept region
/// from a finer level with IoU at or above `dedup_iou`. Regions from the same
/// level never suppress each other, so a one-level pyramid is a pass-through.
pub fn merge_levels(per_level: Vec<Vec<ExtremalRegion>>, dedup_iou: f64) -> Vec<ExtremalRegion> {
    let mut kept: Vec<ExtremalRegion> = Vec::new();
    for level in per_level {
        let finer = kept.len();
        for r in level {
            let dup = kept[..finer]
                .iter()
                .any(|k| k.bbox.iou(&r.bbox) >= dedup_iou);
            if !dup {
                kept.push(r);
            }
        }
    }
    kept.sort_by(|a, b| {
        (a.scale_level, a.sort_key())
            .cmp(&(b.scale_level, b.sort_key()))
            .then_with(|| a.pixels.cmp(&b.pixels))
    });
    kept
}

pub fn detect_mr_mser(pyr: &ImagePyramid, params: &MrMserParams) -> Vec<ExtremalRegion> {
    merge_levels(detect_per_level(pyr, params), params.dedup_iou)
}
