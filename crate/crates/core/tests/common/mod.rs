//! Slow reference implementations used to cross-check the fast kernels.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rough_mser::imaging::GrayImage;
use rough_mser::mser::{ExtremalRegion, MserParams, Polarity, PolarityMode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random image drawing every pixel from a small random palette.
pub fn random_image(rng: &mut ChaCha8Rng, max_side: u32, max_levels: usize) -> GrayImage {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let k = rng.random_range(1..=max_levels);
    let palette: Vec<u8> = (0..k).map(|_| rng.random()).collect();
    GrayImage::from_fn(w, h, |_, _| palette[rng.random_range(0..k)]).unwrap()
}

/// A region reduced to what the oracle can compare.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRegion {
    pub polarity: Polarity,
    pub pixels: Vec<u32>,
    pub level: u8,
    pub variation: f64,
}

pub fn from_detected(r: &ExtremalRegion, width: u32) -> OracleRegion {
    let mut pixels: Vec<u32> = r.pixels.pixels().map(|(x, y)| y * width + x).collect();
    pixels.sort_unstable();
    OracleRegion {
        polarity: r.polarity,
        pixels,
        level: r.level,
        variation: r.variation,
    }
}

pub fn sort_oracle(v: &mut [OracleRegion]) {
    v.sort_by(|a, b| (a.polarity, &a.pixels, a.level).cmp(&(b.polarity, &b.pixels, b.level)));
}

/// 4-connected components of `{rank <= level}`, as a label per pixel.
fn label(ranks: &[u32], w: usize, h: usize, level: u32) -> Vec<Option<usize>> {
    let mut lab = vec![None; ranks.len()];
    let mut next = 0;
    for s in 0..ranks.len() {
        if ranks[s] > level || lab[s].is_some() {
            continue;
        }
        lab[s] = Some(next);
        let mut q = VecDeque::from([s]);
        while let Some(p) = q.pop_front() {
            let (x, y) = (p % w, p / w);
            let mut nb = Vec::with_capacity(4);
            if x > 0 {
                nb.push(p - 1);
            }
            if x + 1 < w {
                nb.push(p + 1);
            }
            if y > 0 {
                nb.push(p - w);
            }
            if y + 1 < h {
                nb.push(p + w);
            }
            for n in nb {
                if ranks[n] <= level && lab[n].is_none() {
                    lab[n] = Some(next);
                    q.push_back(n);
                }
            }
        }
        next += 1;
    }
    lab
}

struct OracleNode {
    pixels: Vec<u32>,
    birth: u32,
    parent: Option<usize>,
}

/// Brute-force threshold sweep for one polarity (dark regions of `img`).
fn sweep(img: &GrayImage, params: &MserParams) -> Vec<(Vec<u32>, u32, f64)> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut values: Vec<u8> = img.as_raw().to_vec();
    values.sort_unstable();
    values.dedup();
    let ranks: Vec<u32> = img
        .as_raw()
        .iter()
        .map(|v| values.binary_search(v).unwrap() as u32)
        .collect();
    let top = values.len() as u32 - 1;

    // component pixel sets at every level, deduplicated into nodes
    let mut ids: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut nodes: Vec<OracleNode> = Vec::new();
    let mut at: Vec<Vec<Option<usize>>> = Vec::new(); // at[level][pixel] -> node
    for l in 0..=top {
        let lab = label(&ranks, w, h, l);
        let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (p, c) in lab.iter().enumerate() {
            if let Some(c) = c {
                groups.entry(*c).or_default().push(p as u32);
            }
        }
        let mut map = vec![None; ranks.len()];
        for (_, px) in groups {
            let id = *ids.entry(px.clone()).or_insert_with(|| {
                nodes.push(OracleNode {
                    pixels: px.clone(),
                    birth: l,
                    parent: None,
                });
                nodes.len() - 1
            });
            for &p in &px {
                map[p as usize] = Some(id);
            }
        }
        at.push(map);
    }
    for (id, node) in nodes.iter_mut().enumerate() {
        let p0 = node.pixels[0] as usize;
        node.parent = (node.birth + 1..=top)
            .map(|l| at[l as usize][p0].unwrap())
            .find(|&n| n != id);
    }
    let root = at[top as usize][0].unwrap();
    let children = |id: usize| -> Vec<usize> { (0..nodes.len()).filter(|&c| nodes[c].parent == Some(id)).collect() };
    let area = |id: usize| nodes[id].pixels.len() as f64;

    let mut stab = vec![(f64::INFINITY, 0u32); nodes.len()];
    for id in 0..nodes.len() {
        if id == root {
            continue;
        }
        let b = nodes[id].birth;
        let death = nodes[nodes[id].parent.unwrap()].birth - 1;
        let p0 = nodes[id].pixels[0] as usize;
        for l in b..=death.min(b + params.delta) {
            let plus = at[(l + params.delta).min(top - 1) as usize][p0].unwrap();
            let mut minus = id;
            while nodes[minus].birth + params.delta > l {
                let kids = children(minus);
                let Some(&big) = kids.iter().max_by(|&&a, &&c| {
                    (nodes[a].pixels.len(), std::cmp::Reverse(nodes[a].pixels[0]))
                        .cmp(&(nodes[c].pixels.len(), std::cmp::Reverse(nodes[c].pixels[0])))
                }) else {
                    break;
                };
                minus = big;
            }
            let v = (area(plus) - area(minus)) / area(id);
            if v < stab[id].0 {
                stab[id] = (v, l);
            }
        }
    }

    let max_area = params.max_area(img.width(), img.height());
    let candidate: Vec<bool> = (0..nodes.len())
        .map(|id| {
            if id == root {
                return false;
            }
            let a = area(id);
            let v = stab[id].0;
            if a < params.min_area as f64 || a > max_area || v > params.max_variation {
                return false;
            }
            let parent = nodes[id].parent.unwrap();
            if parent != root && stab[parent].0 < v {
                return false;
            }
            children(id).iter().all(|&c| stab[c].0 >= v)
        })
        .collect();

    let is_ancestor = |a: usize, mut c: usize| {
        while let Some(p) = nodes[c].parent {
            if p == a {
                return true;
            }
            c = p;
        }
        false
    };
    let mut pruned = vec![false; nodes.len()];
    for c in 0..nodes.len() {
        for a in 0..nodes.len() {
            if !candidate[c] || !candidate[a] || a == root || !is_ancestor(a, c) {
                continue;
            }
            let change = (area(a) - area(c)) / area(a);
            if change >= params.min_diversity {
                continue;
            }
            let (vc, va) = (stab[c].0, stab[a].0);
            if vc < va || (vc == va && area(c) < area(a)) {
                pruned[a] = true;
            } else {
                pruned[c] = true;
            }
        }
    }
    (0..nodes.len())
        .filter(|&id| candidate[id] && !pruned[id])
        .map(|id| (nodes[id].pixels.clone(), values[stab[id].1 as usize] as u32, stab[id].0))
        .collect()
}

/// Reference MSER: explicit connected components at every threshold.
pub fn mser_oracle(img: &GrayImage, params: &MserParams) -> Vec<OracleRegion> {
    let mut out = Vec::new();
    let dark = matches!(params.polarity, PolarityMode::DarkOnBright | PolarityMode::Both);
    let bright = matches!(params.polarity, PolarityMode::BrightOnDark | PolarityMode::Both);
    if dark {
        for (pixels, level, variation) in sweep(img, params) {
            out.push(OracleRegion {
                polarity: Polarity::DarkOnBright,
                pixels,
                level: level as u8,
                variation,
            });
        }
    }
    if bright {
        let inv = GrayImage::from_fn(img.width(), img.height(), |x, y| 255 - img.get(x, y)).unwrap();
        for (pixels, level, variation) in sweep(&inv, params) {
            out.push(OracleRegion {
                polarity: Polarity::BrightOnDark,
                pixels,
                level: 255 - level as u8,
                variation,
            });
        }
    }
    sort_oracle(&mut out);
    out
}

/// Naive rough entropy at threshold `t` for dark objects with 2x2 granules,
/// rescanning the pixels of every granule.
pub fn naive_re(img: &GrayImage, t: u8) -> f64 {
    let (w, h) = img.dimensions();
    let (mut lo_o, mut up_o, mut lo_b, mut up_b) = (0u32, 0u32, 0u32, 0u32);
    for gy in (0..h).step_by(2) {
        for gx in (0..w).step_by(2) {
            let mut all_obj = true;
            let mut any_obj = false;
            for y in gy..(gy + 2).min(h) {
                for x in gx..(gx + 2).min(w) {
                    let obj = img.get(x, y) <= t;
                    all_obj &= obj;
                    any_obj |= obj;
                }
            }
            lo_o += all_obj as u32;
            up_o += any_obj as u32;
            lo_b += !any_obj as u32;
            up_b += !all_obj as u32;
        }
    }
    let rough = |lo: u32, up: u32| if up == 0 { 0.0 } else { 1.0 - lo as f64 / up as f64 };
    let term = |r: f64| if r > 0.0 { r * r.ln() } else { 0.0 };
    let (ro, rb) = (rough(lo_o, up_o), rough(lo_b, up_b));
    -(std::f64::consts::E / 2.0) * (term(ro) + term(rb))
}

/// Smallest T maximizing the naive curve.
pub fn naive_threshold(img: &GrayImage) -> (u8, Vec<f64>) {
    let curve: Vec<f64> = (0..=255u8).map(|t| naive_re(img, t)).collect();
    let mut best = 0;
    for t in 1..256 {
        if curve[t] > curve[best] {
            best = t;
        }
    }
    (best as u8, curve)
}
