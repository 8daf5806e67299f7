//! Granular rough-set thresholding.
//!
//! The image is tiled into non-overlapping granules (2×2 by default). For a
//! threshold `T` the object set is `{p : I(p) <= T}` (dark objects) and each
//! granule is either certainly inside it (lower approximation), possibly inside
//! it (upper approximation), or both. Cardinalities are granule counts.
//!
//! Roughness is `1 - |lower| / |upper|` (0 when the upper approximation is
//! empty) and the rough entropy of a threshold is
//!
//! ```text
//! RE_T = -(e / 2) * (R_O ln R_O + R_B ln R_B),    x ln x := 0 at x = 0
//! ```
//!
//! The selected threshold is the smallest `T` maximising `RE_T`.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::mser::ExtremalRegion;

/// Which side of the threshold is the object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectPolarity {
    /// Object pixels are `<= T`.
    #[default]
    Dark,
    /// Object pixels are `> T`.
    Bright,
    /// Both masks are computed and their union is used.
    Both,
}

impl ObjectPolarity {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectPolarity::Dark => "dark-object",
            ObjectPolarity::Bright => "bright-object",
            ObjectPolarity::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dark-object" | "dark" => Some(ObjectPolarity::Dark),
            "bright-object" | "bright" => Some(ObjectPolarity::Bright),
            "both" => Some(ObjectPolarity::Both),
            _ => None,
        }
    }
}

/// One granule: its pixel rectangle and intensity range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Granule {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub min: u8,
    pub max: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GranuleGrid {
    pub granule_w: u32,
    pub granule_h: u32,
    pub cols: u32,
    pub rows: u32,
    /// Row-major, `cols * rows` entries.
    pub cells: Vec<Granule>,
}

impl GranuleGrid {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Tile `img` into `gw × gh` granules; edge granules may be partial.
pub fn granulate(img: &GrayImage, gw: u32, gh: u32) -> Result<GranuleGrid> {
    if gw == 0 || gh == 0 {
        return Err(Error::InvalidParam(format!(
            "granule size must be positive, got {gw}x{gh}"
        )));
    }
    let (w, h) = img.dimensions();
    let cols = w.div_ceil(gw);
    let rows = h.div_ceil(gh);
    let mut cells = Vec::with_capacity(cols as usize * rows as usize);
    for gy in 0..rows {
        for gx in 0..cols {
            let (x, y) = (gx * gw, gy * gh);
            let cw = gw.min(w - x);
            let ch = gh.min(h - y);
            let (mut lo, mut hi) = (u8::MAX, u8::MIN);
            for yy in y..y + ch {
                for xx in x..x + cw {
                    let v = img.get(xx, yy);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            cells.push(Granule {
                x,
                y,
                w: cw,
                h: ch,
                min: lo,
                max: hi,
            });
        }
    }
    Ok(GranuleGrid {
        granule_w: gw,
        granule_h: gh,
        cols,
        rows,
        cells,
    })
}

/// Granule counts of the object and background approximations at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ApproximationCounts {
    pub t: u8,
    pub lower_obj: u64,
    pub upper_obj: u64,
    pub lower_bg: u64,
    pub upper_bg: u64,
}

impl ApproximationCounts {
    /// Granules that are neither certainly object nor certainly background.
    pub fn boundary(&self) -> u64 {
        self.upper_obj - self.lower_obj
    }
}

/// Counts by direct scan of the grid.
pub fn approximations_at(grid: &GranuleGrid, t: u8, polarity: ObjectPolarity) -> ApproximationCounts {
    // dark: granule certainly object iff max <= t, possibly object iff min <= t
    let mut max_le = 0u64;
    let mut min_le = 0u64;
    for g in &grid.cells {
        max_le += (g.max <= t) as u64;
        min_le += (g.min <= t) as u64;
    }
    counts_from_cumulative(t, grid.len() as u64, max_le, min_le, polarity)
}

fn counts_from_cumulative(
    t: u8,
    total: u64,
    max_le: u64,
    min_le: u64,
    polarity: ObjectPolarity,
) -> ApproximationCounts {
    let (dark_lower, dark_upper) = (max_le, min_le);
    let (bright_lower, bright_upper) = (total - min_le, total - max_le);
    match polarity {
        ObjectPolarity::Bright => ApproximationCounts {
            t,
            lower_obj: bright_lower,
            upper_obj: bright_upper,
            lower_bg: dark_lower,
            upper_bg: dark_upper,
        },
        ObjectPolarity::Dark | ObjectPolarity::Both => ApproximationCounts {
            t,
            lower_obj: dark_lower,
            upper_obj: dark_upper,
            lower_bg: bright_lower,
            upper_bg: bright_upper,
        },
    }
}

/// `1 - lower / upper`, or 0 for an empty upper approximation.
#[inline]
pub fn roughness(lower: u64, upper: u64) -> f64 {
    if upper == 0 {
        0.0
    } else {
        1.0 - lower as f64 / upper as f64
    }
}

#[inline]
fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Rough entropy of an object/background roughness pair.
#[inline]
pub fn rough_entropy(r_obj: f64, r_bg: f64) -> f64 {
    -(E / 2.0) * (x_ln_x(r_obj) + x_ln_x(r_bg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(flatten)]
    pub counts: ApproximationCounts,
    pub r_obj: f64,
    pub r_bg: f64,
    pub re: f64,
}

impl CurvePoint {
    pub fn from_counts(counts: ApproximationCounts) -> Self {
        let r_obj = roughness(counts.lower_obj, counts.upper_obj);
        let r_bg = roughness(counts.lower_bg, counts.upper_bg);
        Self {
            counts,
            r_obj,
            r_bg,
            re: rough_entropy(r_obj, r_bg),
        }
    }
}

/// One point per threshold `0..=255`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessCurve {
    pub entries: Vec<CurvePoint>,
}

impl RoughnessCurve {
    pub fn at(&self, t: u8) -> &CurvePoint {
        &self.entries[t as usize]
    }

    /// CSV with header `T,lower_obj,upper_obj,lower_bg,upper_bg,R_OT,R_BT,RE_T`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,lower_obj,upper_obj,lower_bg,upper_bg,R_OT,R_BT,RE_T\n");
        for p in &self.entries {
            let c = &p.counts;
            out.push_str(&format!(
                "{},{},{},{},{},{:.9},{:.9},{:.9}\n",
                c.t, c.lower_obj, c.upper_obj, c.lower_bg, c.upper_bg, p.r_obj, p.r_bg, p.re
            ));
        }
        out
    }
}

/// Full curve from per-granule min/max histograms, `O(256 + granules)`.
pub fn rough_entropy_curve(grid: &GranuleGrid, polarity: ObjectPolarity) -> RoughnessCurve {
    let mut hist_min = [0u64; 256];
    let mut hist_max = [0u64; 256];
    for g in &grid.cells {
        hist_min[g.min as usize] += 1;
        hist_max[g.max as usize] += 1;
    }
    let total = grid.len() as u64;
    let (mut min_le, mut max_le) = (0u64, 0u64);
    let entries = (0..=255u8)
        .map(|t| {
            min_le += hist_min[t as usize];
            max_le += hist_max[t as usize];
            CurvePoint::from_counts(counts_from_cumulative(t, total, max_le, min_le, polarity))
        })
        .collect();
    RoughnessCurve { entries }
}

/// Smallest threshold attaining the maximum rough entropy.
pub fn optimal_threshold(curve: &RoughnessCurve) -> u8 {
    let mut best = 0usize;
    for (i, p) in curve.entries.iter().enumerate() {
        if p.re > curve.entries[best].re {
            best = i;
        }
    }
    best as u8
}

/// 255 where the pixel belongs to the object side of `t`, 0 elsewhere.
pub fn binarize(img: &GrayImage, t: u8, polarity: ObjectPolarity) -> GrayImage {
    img.map(|v| {
        let object = match polarity {
            ObjectPolarity::Dark => v <= t,
            ObjectPolarity::Bright => v > t,
            ObjectPolarity::Both => true,
        };
        if object {
            255
        } else {
            0
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub t_star: u8,
    /// Binary object mask (255 object, 0 background).
    pub mask: GrayImage,
    pub curve: RoughnessCurve,
}

/// Granulate, sweep all thresholds, and binarize at the optimum.
///
/// With [`ObjectPolarity::Both`] each polarity picks its own optimum, the
/// masks are united, and `t_star`/`curve` describe the dark sweep.
pub fn rough_entropy_threshold(
    img: &GrayImage,
    granule: (u32, u32),
    polarity: ObjectPolarity,
) -> Result<ThresholdResult> {
    let grid = granulate(img, granule.0, granule.1)?;
    let single = |p: ObjectPolarity| {
        let curve = rough_entropy_curve(&grid, p);
        let t_star = optimal_threshold(&curve);
        ThresholdResult {
            t_star,
            mask: binarize(img, t_star, p),
            curve,
        }
    };
    Ok(match polarity {
        ObjectPolarity::Both => {
            let dark = single(ObjectPolarity::Dark);
            let bright = single(ObjectPolarity::Bright);
            let data = dark
                .mask
                .as_raw()
                .iter()
                .zip(bright.mask.as_raw())
                .map(|(&a, &b)| a.max(b))
                .collect();
            ThresholdResult {
                mask: GrayImage::new(img.width(), img.height(), data)?,
                ..dark
            }
        }
        p => single(p),
    })
}

/// Fraction of the region's footprint that falls on object pixels.
pub fn object_fraction(region: &ExtremalRegion, mask: &GrayImage) -> f64 {
    let (w, h) = mask.dimensions();
    let mut hit = 0u64;
    for r in region.pixels.runs() {
        if r.y >= h {
            continue;
        }
        for x in r.x0..r.x1.min(w) {
            hit += (mask.get(x, r.y) != 0) as u64;
        }
    }
    let area = region.pixels.area();
    if area == 0 {
        0.0
    } else {
        hit as f64 / area as f64
    }
}

/// Keep regions whose footprint is at least `min_object_fraction` object.
pub fn filter_regions(
    regions: &[ExtremalRegion],
    mask: &GrayImage,
    min_object_fraction: f64,
) -> Vec<ExtremalRegion> {
    regions
        .iter()
        .filter(|r| object_fraction(r, mask) >= min_object_fraction)
        .cloned()
        .collect()
}
