//! Maximally stable extremal regions.
//!
//! The detector builds the component tree of the dark sweep (thresholds rising
//! from black to white) with a union-find over pixels visited in intensity
//! order. Bright-on-dark regions come from the same sweep over the inverted
//! image.
//!
//! Each tree node is one distinct connected set of `{p : I(p) <= t}`. It is
//! born at level `a` and lives until its parent appears. Threshold arithmetic
//! (`l ± delta`) runs on the ordinal scale of intensities actually present in
//! the image, so the output depends only on the ordering of gray values. At a
//! level `l` inside the node's lifetime:
//!
//! * `R+` is the ancestor reached by climbing while the ancestor's level stays
//!   within `l + delta`. The whole-image root is never used: it has no boundary
//!   and is not an extremal region, so the climb stops below it.
//! * `R-` is found by descending into the largest child (ties: the child that
//!   holds the lowest raster index) while the level is above `l - delta`; a
//!   leaf clamps the descent.
//! * `variation(l) = (|R+| - |R-|) / |R|`.
//!
//! A node's variation is the minimum over its lifetime, reported at the lowest
//! level attaining it. The node is kept when no tree neighbour (parent or
//! child, root excluded) has a strictly smaller variation, its area lies in
//! `[min_area, max_area]` and its variation is at most `max_variation`. Among
//! surviving nested pairs whose relative area change is below `min_diversity`,
//! the less stable one is dropped, or the larger one on equal variation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, GrayImage};
use crate::mask::RunMask;

const NONE: u32 = u32::MAX;

/// Which sweep produced a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    /// Dark blob on a brighter surround (low-to-high sweep).
    DarkOnBright,
    /// Bright blob on a darker surround (sweep over the inverted image).
    BrightOnDark,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::DarkOnBright => "dark-on-bright",
            Polarity::BrightOnDark => "bright-on-dark",
        }
    }
}

/// Which sweeps [`detect_mser`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarityMode {
    DarkOnBright,
    BrightOnDark,
    #[default]
    Both,
}

impl PolarityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PolarityMode::DarkOnBright => "dark-on-bright",
            PolarityMode::BrightOnDark => "bright-on-dark",
            PolarityMode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dark-on-bright" | "dark" => Some(PolarityMode::DarkOnBright),
            "bright-on-dark" | "bright" => Some(PolarityMode::BrightOnDark),
            "both" => Some(PolarityMode::Both),
            _ => None,
        }
    }

    fn sweeps(self) -> &'static [Polarity] {
        match self {
            PolarityMode::DarkOnBright => &[Polarity::DarkOnBright],
            PolarityMode::BrightOnDark => &[Polarity::BrightOnDark],
            PolarityMode::Both => &[Polarity::DarkOnBright, Polarity::BrightOnDark],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MserParams {
    /// Stability margin, in occupied gray levels.
    pub delta: u32,
    pub min_area: u64,
    pub max_area_fraction: f64,
    pub max_variation: f64,
    pub min_diversity: f64,
    pub polarity: PolarityMode,
}

impl Default for MserParams {
    fn default() -> Self {
        Self {
            delta: 5,
            min_area: 10,
            max_area_fraction: 0.05,
            max_variation: 0.5,
            min_diversity: 0.2,
            polarity: PolarityMode::Both,
        }
    }
}

impl MserParams {
    /// Checks the parameter ranges that do not depend on the image.
    pub fn validate(&self) -> Result<()> {
        if self.delta < 1 {
            return Err(Error::InvalidParam("mser.delta must be >= 1".into()));
        }
        if self.min_area < 1 {
            return Err(Error::InvalidParam("mser.min_area must be >= 1".into()));
        }
        if !(self.max_area_fraction > 0.0 && self.max_area_fraction <= 1.0) {
            return Err(Error::InvalidParam(
                "mser.max_area_fraction must be in (0,1]".into(),
            ));
        }
        if self.max_variation.is_nan() || self.max_variation <= 0.0 {
            return Err(Error::InvalidParam("mser.max_variation must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.min_diversity) {
            return Err(Error::InvalidParam(
                "mser.min_diversity must be in [0,1]".into(),
            ));
        }
        Ok(())
    }

    pub fn max_area(&self, width: u32, height: u32) -> f64 {
        self.max_area_fraction * width as f64 * height as f64
    }
}

/// A connected pixel set with its stability score.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalRegion {
    pub pixels: RunMask,
    /// Threshold (original intensity) at which the region is most stable.
    pub level: u8,
    pub area: u64,
    pub variation: f64,
    pub bbox: BoundingBox,
    pub polarity: Polarity,
    /// Pyramid level of origin; pixels and bbox are always in the base frame.
    pub scale_level: u32,
}

impl ExtremalRegion {
    pub fn record(&self) -> RegionRecord {
        RegionRecord {
            level: self.level,
            area: self.area,
            variation: self.variation,
            polarity: self.polarity,
            bbox: self.bbox,
            scale_level: self.scale_level,
        }
    }

    pub(crate) fn sort_key(&self) -> (u8, i32, i32, u32, u32, u64, Polarity) {
        (
            self.level,
            self.bbox.x,
            self.bbox.y,
            self.bbox.w,
            self.bbox.h,
            self.area,
            self.polarity,
        )
    }
}

/// JSON form of a region for debug dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub level: u8,
    pub area: u64,
    pub variation: f64,
    pub polarity: Polarity,
    pub bbox: BoundingBox,
    pub scale_level: u32,
}

/// Sort into the canonical `(level, x, y, ...)` order.
pub fn sort_regions(regions: &mut [ExtremalRegion]) {
    regions.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then_with(|| a.pixels.cmp(&b.pixels))
    });
}

pub fn detect_mser(img: &GrayImage, params: &MserParams) -> Vec<ExtremalRegion> {
    let sweeps = params.polarity.sweeps();
    let mut out = if sweeps.len() == 2 {
        let (mut dark, bright) = rayon::join(
            || detect_polarity(img, params, Polarity::DarkOnBright),
            || detect_polarity(img, params, Polarity::BrightOnDark),
        );
        dark.extend(bright);
        dark
    } else {
        detect_polarity(img, params, sweeps[0])
    };
    sort_regions(&mut out);
    out
}

/// One sweep, unsorted.
pub fn detect_polarity(
    img: &GrayImage,
    params: &MserParams,
    polarity: Polarity,
) -> Vec<ExtremalRegion> {
    let inverted;
    let src = match polarity {
        Polarity::DarkOnBright => img,
        Polarity::BrightOnDark => {
            inverted = img.inverted();
            &inverted
        }
    };
    let tree = ComponentTree::build(src);
    let selected = tree.select(params, img.width(), img.height());
    selected
        .into_iter()
        .map(|(id, variation, level)| {
            let node = &tree.nodes[id as usize];
            let pixels = RunMask::from_indices(tree.pixels_of(id), img.width());
            let value = tree.values[level as usize];
            ExtremalRegion {
                bbox: node.bbox(),
                area: node.area as u64,
                variation,
                level: match polarity {
                    Polarity::DarkOnBright => value,
                    Polarity::BrightOnDark => 255 - value,
                },
                polarity,
                scale_level: 0,
                pixels,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Node {
    /// Ordinal level (index into the occupied intensities).
    level: u32,
    area: u32,
    /// First pixel of this node's contiguous segment in the pixel chain.
    head: u32,
    min_index: u32,
    parent: u32,
    first_child: u32,
    next_sibling: u32,
    big_child: u32,
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl Node {
    fn bbox(&self) -> BoundingBox {
        BoundingBox::from_corners(
            self.x0 as i64,
            self.y0 as i64,
            self.x1 as i64 + 1,
            self.y1 as i64 + 1,
        )
    }
}

/// Component tree of the low-to-high threshold sweep.
struct ComponentTree {
    nodes: Vec<Node>,
    /// Pixel chain; every node's pixels occupy `area` consecutive links from `head`.
    next: Vec<u32>,
    /// Intensity value of each ordinal level.
    values: Vec<u8>,
    root: u32,
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    head: Vec<u32>,
    tail: Vec<u32>,
    node: Vec<u32>,
    min_index: Vec<u32>,
    x0: Vec<u32>,
    y0: Vec<u32>,
    x1: Vec<u32>,
    y1: Vec<u32>,
}

impl UnionFind {
    fn find(&mut self, mut p: u32) -> u32 {
        while self.parent[p as usize] != p {
            let gp = self.parent[self.parent[p as usize] as usize];
            self.parent[p as usize] = gp;
            p = gp;
        }
        p
    }
}

impl ComponentTree {
    fn build(img: &GrayImage) -> Self {
        let (w, h) = img.dimensions();
        let n = img.len();
        let data = img.as_raw();

        let mut hist = [0usize; 256];
        for &v in data {
            hist[v as usize] += 1;
        }
        let values: Vec<u8> = (0..=255u8).filter(|&v| hist[v as usize] > 0).collect();
        let mut rank_of = [0u32; 256];
        for (r, &v) in values.iter().enumerate() {
            rank_of[v as usize] = r as u32;
        }

        // counting sort by intensity, stable in raster order
        let mut start = vec![0usize; values.len() + 1];
        for (r, &v) in values.iter().enumerate() {
            start[r + 1] = start[r] + hist[v as usize];
        }
        let mut order = vec![0u32; n];
        let mut fill = start.clone();
        for (i, &v) in data.iter().enumerate() {
            let r = rank_of[v as usize] as usize;
            order[fill[r]] = i as u32;
            fill[r] += 1;
        }

        let mut uf = UnionFind {
            parent: vec![NONE; n],
            size: vec![0; n],
            head: vec![NONE; n],
            tail: vec![NONE; n],
            node: vec![NONE; n],
            min_index: vec![NONE; n],
            x0: vec![0; n],
            y0: vec![0; n],
            x1: vec![0; n],
            y1: vec![0; n],
        };
        let mut next = vec![NONE; n];
        let mut nodes: Vec<Node> = Vec::new();
        let mut orphans: Vec<u32> = Vec::new();
        let mut touched: Vec<(u32, u32)> = Vec::new();

        for r in 0..values.len() {
            let level_pixels = &order[start[r]..start[r + 1]];
            for &p in level_pixels {
                let pu = p as usize;
                let (x, y) = (p % w, p / w);
                uf.parent[pu] = p;
                uf.size[pu] = 1;
                uf.head[pu] = p;
                uf.tail[pu] = p;
                uf.min_index[pu] = p;
                uf.x0[pu] = x;
                uf.x1[pu] = x;
                uf.y0[pu] = y;
                uf.y1[pu] = y;

                let mut neighbours = [NONE; 4];
                if x > 0 {
                    neighbours[0] = p - 1;
                }
                if x + 1 < w {
                    neighbours[1] = p + 1;
                }
                if y > 0 {
                    neighbours[2] = p - w;
                }
                if y + 1 < h {
                    neighbours[3] = p + w;
                }
                for q in neighbours {
                    if q == NONE || uf.parent[q as usize] == NONE {
                        continue;
                    }
                    let ra = uf.find(p);
                    let rb = uf.find(q);
                    if ra == rb {
                        continue;
                    }
                    for root in [ra, rb] {
                        let nd = uf.node[root as usize];
                        if nd != NONE {
                            orphans.push(nd);
                            uf.node[root as usize] = NONE;
                        }
                    }
                    let (big, small) = {
                        let (sa, sb) = (uf.size[ra as usize], uf.size[rb as usize]);
                        if sa > sb || (sa == sb && ra < rb) {
                            (ra, rb)
                        } else {
                            (rb, ra)
                        }
                    };
                    let (bu, su) = (big as usize, small as usize);
                    uf.parent[su] = big;
                    uf.size[bu] += uf.size[su];
                    next[uf.tail[bu] as usize] = uf.head[su];
                    uf.tail[bu] = uf.tail[su];
                    uf.min_index[bu] = uf.min_index[bu].min(uf.min_index[su]);
                    uf.x0[bu] = uf.x0[bu].min(uf.x0[su]);
                    uf.y0[bu] = uf.y0[bu].min(uf.y0[su]);
                    uf.x1[bu] = uf.x1[bu].max(uf.x1[su]);
                    uf.y1[bu] = uf.y1[bu].max(uf.y1[su]);
                }
            }

            // one new node per component that changed at this level
            touched.clear();
            for &p in level_pixels {
                touched.push((uf.find(p), NONE));
            }
            for &nd in &orphans {
                let root = uf.find(nodes[nd as usize].head);
                touched.push((root, nd));
            }
            touched.sort_unstable();
            let mut i = 0;
            while i < touched.len() {
                let root = touched[i].0;
                let ru = root as usize;
                let id = nodes.len() as u32;
                let mut node = Node {
                    level: r as u32,
                    area: uf.size[ru],
                    head: uf.head[ru],
                    min_index: uf.min_index[ru],
                    parent: NONE,
                    first_child: NONE,
                    next_sibling: NONE,
                    big_child: NONE,
                    x0: uf.x0[ru],
                    y0: uf.y0[ru],
                    x1: uf.x1[ru],
                    y1: uf.y1[ru],
                };
                while i < touched.len() && touched[i].0 == root {
                    let child = touched[i].1;
                    i += 1;
                    if child == NONE {
                        continue;
                    }
                    let c = &mut nodes[child as usize];
                    c.parent = id;
                    c.next_sibling = node.first_child;
                    node.first_child = child;
                    let better = match node.big_child {
                        NONE => true,
                        b => {
                            let (c, b) = (&nodes[child as usize], &nodes[b as usize]);
                            c.area > b.area || (c.area == b.area && c.min_index < b.min_index)
                        }
                    };
                    if better {
                        node.big_child = child;
                    }
                }
                uf.node[ru] = id;
                nodes.push(node);
            }
            orphans.clear();
        }

        let root = (nodes.len() - 1) as u32;
        ComponentTree {
            nodes,
            next,
            values,
            root,
        }
    }

    /// Most stable `(variation, level)` of every node over its lifetime.
    ///
    /// A node born at `a` lives until its parent's level minus one. For
    /// `l >= a + delta` the lower region is the node itself while the upper one
    /// only grows, so scanning `[a, a + delta]` finds the minimum.
    fn stability(&self, delta: u32) -> Vec<(f64, u32)> {
        let top_level = self.nodes[self.root as usize].level;
        self.nodes
            .iter()
            .enumerate()
            .map(|(id, node)| {
                let id = id as u32;
                if id == self.root {
                    return (0.0, node.level);
                }
                let death = self.nodes[node.parent as usize].level - 1;
                let mut best = (f64::INFINITY, node.level);
                for l in node.level..=death.min(node.level + delta) {
                    let up_limit = (l + delta).min(top_level - 1);
                    let mut up = id;
                    loop {
                        let p = self.nodes[up as usize].parent;
                        if p == self.root || self.nodes[p as usize].level > up_limit {
                            break;
                        }
                        up = p;
                    }
                    let mut down = id;
                    loop {
                        let d = &self.nodes[down as usize];
                        if d.level + delta <= l || d.big_child == NONE {
                            break;
                        }
                        down = d.big_child;
                    }
                    let grow = self.nodes[up as usize].area - self.nodes[down as usize].area;
                    let v = grow as f64 / node.area as f64;
                    if v < best.0 {
                        best = (v, l);
                    }
                }
                best
            })
            .collect()
    }

    fn is_local_minimum(&self, id: u32, variation: &[f64]) -> bool {
        let node = &self.nodes[id as usize];
        let v = variation[id as usize];
        if node.parent != NONE && node.parent != self.root && variation[node.parent as usize] < v {
            return false;
        }
        let mut c = node.first_child;
        while c != NONE {
            if variation[c as usize] < v {
                return false;
            }
            c = self.nodes[c as usize].next_sibling;
        }
        true
    }

    /// Node ids of the maximally stable regions, in no particular order.
    fn select(&self, params: &MserParams, width: u32, height: u32) -> Vec<(u32, f64, u32)> {
        let stability = self.stability(params.delta);
        let variation: Vec<f64> = stability.iter().map(|s| s.0).collect();
        let max_area = params.max_area(width, height);
        let n = self.nodes.len();
        let mut candidate = vec![false; n];
        for id in 0..n as u32 {
            if id == self.root {
                continue;
            }
            let node = &self.nodes[id as usize];
            let area = node.area as u64;
            if area < params.min_area || area as f64 > max_area {
                continue;
            }
            if variation[id as usize] > params.max_variation {
                continue;
            }
            candidate[id as usize] = self.is_local_minimum(id, &variation);
        }

        let beats = |a: u32, b: u32| {
            let (va, vb) = (variation[a as usize], variation[b as usize]);
            va < vb || (va == vb && self.nodes[a as usize].area < self.nodes[b as usize].area)
        };
        let mut pruned = vec![false; n];
        for id in 0..n as u32 {
            if !candidate[id as usize] {
                continue;
            }
            let small = self.nodes[id as usize].area;
            let mut a = self.nodes[id as usize].parent;
            while a != NONE && a != self.root {
                let big = self.nodes[a as usize].area;
                if relative_change(small as u64, big as u64) >= params.min_diversity {
                    break;
                }
                if candidate[a as usize] {
                    if beats(id, a) {
                        pruned[a as usize] = true;
                    } else {
                        pruned[id as usize] = true;
                    }
                }
                a = self.nodes[a as usize].parent;
            }
        }

        (0..n as u32)
            .filter(|&id| candidate[id as usize] && !pruned[id as usize])
            .map(|id| (id, stability[id as usize].0, stability[id as usize].1))
            .collect()
    }

    fn pixels_of(&self, id: u32) -> Vec<u32> {
        let node = &self.nodes[id as usize];
        let mut out = Vec::with_capacity(node.area as usize);
        let mut p = node.head;
        for _ in 0..node.area {
            out.push(p);
            p = self.next[p as usize];
        }
        out
    }
}

/// `(big - small) / big`, the nested-area change used for diversity pruning.
#[inline]
pub fn relative_change(small: u64, big: u64) -> f64 {
    (big - small) as f64 / big as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_image(w: u32, h: u32, bg: u8, fg: u8, blocks: &[BoundingBox]) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| {
            let inside = blocks.iter().any(|b| {
                (x as i32) >= b.x
                    && (x as i64) < b.right()
                    && (y as i32) >= b.y
                    && (y as i64) < b.bottom()
            });
            if inside {
                fg
            } else {
                bg
            }
        })
        .unwrap()
    }

    fn dark_params() -> MserParams {
        MserParams {
            delta: 2,
            min_area: 4,
            max_area_fraction: 0.25,
            polarity: PolarityMode::DarkOnBright,
            ..MserParams::default()
        }
    }

    #[test]
    fn uniform_is_empty() {
        let img = GrayImage::filled(9, 7, 42).unwrap();
        for mode in [
            PolarityMode::DarkOnBright,
            PolarityMode::BrightOnDark,
            PolarityMode::Both,
        ] {
            let p = MserParams {
                polarity: mode,
                max_area_fraction: 1.0,
                min_area: 1,
                ..MserParams::default()
            };
            assert!(detect_mser(&img, &p).is_empty());
        }
    }

    #[test]
    fn single_dark_block() {
        let block = BoundingBox::new(4, 4, 3, 3);
        let img = block_image(12, 12, 200, 10, &[block]);
        let regions = detect_mser(&img, &dark_params());
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!(r.bbox, block);
        assert_eq!(r.area, 9);
        assert_eq!(r.pixels, RunMask::from_box(&block));
        assert_eq!(r.level, 10);
        assert_eq!(r.variation, 0.0);
        assert_eq!(r.polarity, Polarity::DarkOnBright);
    }

    #[test]
    fn bright_block_needs_bright_sweep() {
        let block = BoundingBox::new(2, 3, 3, 3);
        let img = block_image(12, 12, 20, 240, &[block]);
        assert!(detect_mser(&img, &dark_params()).is_empty());
        let p = MserParams {
            polarity: PolarityMode::BrightOnDark,
            ..dark_params()
        };
        let regions = detect_mser(&img, &p);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].bbox, block);
        assert_eq!(regions[0].level, 240);
        assert_eq!(regions[0].polarity, Polarity::BrightOnDark);
    }

    #[test]
    fn monotone_remap_keeps_pixels() {
        let img = block_image(12, 12, 200, 10, &[BoundingBox::new(4, 4, 3, 3)]);
        let remapped = img.map(|v| 255 - (255 - v) / 2);
        let a = detect_mser(&img, &dark_params());
        let b = detect_mser(&remapped, &dark_params());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.pixels, y.pixels);
        }
    }

    #[test]
    fn area_bounds_apply() {
        let img = block_image(12, 12, 200, 10, &[BoundingBox::new(4, 4, 3, 3)]);
        let p = MserParams {
            min_area: 10,
            ..dark_params()
        };
        assert!(detect_mser(&img, &p).is_empty());
        // 9 > 0.05 * 144
        let p = MserParams {
            max_area_fraction: 0.05,
            ..dark_params()
        };
        assert!(detect_mser(&img, &p).is_empty());
    }

    #[test]
    fn nested_blocks_diversity() {
        // 2x2 core at 10 inside a 4x4 ring at 60 on a 200 background; isolated
        // pixels elsewhere give both nested regions a lifetime longer than delta
        let img = GrayImage::from_fn(16, 16, |x, y| match (x, y) {
            (6..=7, 6..=7) => 10,
            (5..=8, 5..=8) => 60,
            (0, 0) => 20,
            (2, 0) => 30,
            (4, 0) => 40,
            (0, 15) => 100,
            (2, 15) => 120,
            _ => 200,
        })
        .unwrap();
        let mut p = dark_params();
        p.delta = 1;
        let regions = detect_mser(&img, &p);
        // core (4 px) and ring (16 px): relative change 0.75 >= 0.2, both kept
        let areas: Vec<u64> = regions.iter().map(|r| r.area).collect();
        assert_eq!(areas, vec![4, 16]);
        assert!(regions.iter().all(|r| r.variation == 0.0));
        assert_eq!(regions[0].level, 10);
        // first stable one level after the ring closes
        assert_eq!(regions[1].level, 100);
        assert!(regions[0].pixels.is_subset_of(&regions[1].pixels));
        // equal variation: the smaller one wins once diversity covers the pair
        p.min_diversity = 0.8;
        let regions = detect_mser(&img, &p);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].area, 4);
    }

    #[test]
    fn short_lived_core_is_unstable() {
        // without intermediate levels the core is absorbed one level after birth
        let img = GrayImage::from_fn(16, 16, |x, y| match (x, y) {
            (6..=7, 6..=7) => 10,
            (5..=8, 5..=8) => 60,
            _ => 200,
        })
        .unwrap();
        let mut p = dark_params();
        p.delta = 1;
        p.max_variation = 5.0;
        let regions = detect_mser(&img, &p);
        // core: (16 - 4) / 4 = 3 ; ring: (16 - 4) / 16 = 0.75
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].area, 16);
        assert_eq!(regions[0].variation, 0.75);
    }

    #[test]
    fn params_validation() {
        assert!(MserParams::default().validate().is_ok());
        let bad = MserParams {
            delta: 0,
            ..MserParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = MserParams {
            min_diversity: 1.5,
            ..MserParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn record_json_shape() {
        let img = block_image(12, 12, 200, 10, &[BoundingBox::new(4, 4, 3, 3)]);
        let r = &detect_mser(&img, &dark_params())[0];
        let json = serde_json::to_value(r.record()).unwrap();
        assert_eq!(json["bbox"], serde_json::json!([4, 4, 3, 3]));
        assert_eq!(json["polarity"], "dark-on-bright");
        assert_eq!(json["level"], 10);
        assert_eq!(json["area"], 9);
    }
}
