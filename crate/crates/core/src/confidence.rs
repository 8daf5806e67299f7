//! Stacked confidence map and proposal extraction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::{round_half_up, BoundingBox, GrayImage};
use crate::mask::RunMask;
use crate::mser::ExtremalRegion;

/// Per-pixel accumulator at base resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
    /// Number of footprints covering each pixel.
    pub depth: Vec<u32>,
    pub normalized: bool,
}

impl ConfidenceMap {
    pub fn zeros(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            values: vec![0.0; n],
            depth: vec![0; n],
            normalized: false,
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `round(255 * value)` raster, clamped; meant for normalized maps.
    pub fn to_image(&self) -> GrayImage {
        let data = self
            .values
            .iter()
            .map(|&v| round_half_up(255.0 * v).clamp(0, 255) as u8)
            .collect();
        GrayImage::new(self.width, self.height, data).expect("map dimensions are positive")
    }
}

/// Default per-region confidence, `1 / (1 + variation)`.
pub fn stability_weight(region: &ExtremalRegion) -> f64 {
    1.0 / (1.0 + region.variation)
}

/// Stack weighted footprints. The accumulation order is canonical (sorted by
/// footprint, then weight bits) so any permutation of the input produces a
/// bit-identical map.
pub fn accumulate_masks(
    footprints: &[&RunMask],
    weights: &[f64],
    width: u32,
    height: u32,
) -> Result<ConfidenceMap> {
    if footprints.len() != weights.len() {
        return Err(Error::InvalidParam(format!(
            "{} footprints but {} weights",
            footprints.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidParam(format!("weight {w} is not a finite non-negative value")));
    }
    if footprints.iter().any(|f| !f.fits(width, height)) {
        return Err(Error::FootprintOutOfBounds { width, height });
    }
    let mut order: Vec<usize> = (0..footprints.len()).collect();
    order.sort_by(|&a, &b| {
        footprints[a]
            .cmp(footprints[b])
            .then_with(|| weights[a].to_bits().cmp(&weights[b].to_bits()))
    });
    let mut map = ConfidenceMap::zeros(width, height);
    let w = width as usize;
    for i in order {
        let weight = weights[i];
        for r in footprints[i].runs() {
            let row = r.y as usize * w;
            for idx in row + r.x0 as usize..row + r.x1 as usize {
                map.values[idx] += weight;
                map.depth[idx] += 1;
            }
        }
    }
    Ok(map)
}

pub fn accumulate(
    regions: &[ExtremalRegion],
    weights: &[f64],
    width: u32,
    height: u32,
) -> Result<ConfidenceMap> {
    let footprints: Vec<&RunMask> = regions.iter().map(|r| &r.pixels).collect();
    accumulate_masks(&footprints, weights, width, height)
}

/// Divide by the maximum; an all-zero map is only flagged.
pub fn normalize(map: &ConfidenceMap) -> ConfidenceMap {
    let max = map.max();
    let mut out = map.clone();
    if max > 0.0 {
        for v in &mut out.values {
            *v /= max;
        }
    }
    out.normalized = true;
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proposal {
    pub bbox: BoundingBox,
    /// Mean normalized confidence over the component.
    pub score: f64,
    /// Deepest footprint stack inside the component.
    pub support: u32,
}

/// Threshold at `tau`, label 4-connected components, and score each by its
/// mean value. Sorted by descending score, then `(x, y)`.
pub fn extract_proposals(map: &ConfidenceMap, tau: f64) -> Vec<Proposal> {
    let (w, h) = (map.width as usize, map.height as usize);
    let on: Vec<bool> = map.values.iter().map(|&v| v >= tau).collect();
    let mut seen = vec![false; on.len()];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    for start in 0..on.len() {
        if !on[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let (mut sum, mut count, mut support) = (0.0, 0usize, 0u32);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            sum += map.values[p];
            count += 1;
            support = support.max(map.depth[p]);
            let mut push = |q: usize| {
                if on[q] && !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if x > 0 {
                push(p - 1);
            }
            if x + 1 < w {
                push(p + 1);
            }
            if y > 0 {
                push(p - w);
            }
            if y + 1 < h {
                push(p + w);
            }
        }
        out.push(Proposal {
            bbox: BoundingBox::from_corners(x0 as i64, y0 as i64, x1 as i64 + 1, y1 as i64 + 1),
            score: (sum / count as f64).clamp(0.0, 1.0),
            support,
        });
    }
    sort_proposals(&mut out);
    out
}

pub fn sort_proposals(props: &mut [Proposal]) {
    props.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| (a.bbox.x, a.bbox.y).cmp(&(b.bbox.x, b.bbox.y)))
            .then_with(|| (a.bbox.w, a.bbox.h).cmp(&(b.bbox.w, b.bbox.h)))
    });
}
