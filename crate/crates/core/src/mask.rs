//! Run-length encoded pixel sets.

use serde::{Deserialize, Serialize};

use crate::imaging::BoundingBox;

/// Half-open horizontal span `[x0, x1)` on row `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Run {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

impl Run {
    #[inline]
    pub fn len(&self) -> u32 {
        self.x1 - self.x0
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.x1 <= self.x0
    }
}

/// A pixel set stored as row intervals sorted by `(y, x0)`, with adjacent
/// intervals on a row always merged.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunMask {
    runs: Vec<Run>,
}

impl RunMask {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from raster indices (`y * width + x`), in any order.
    pub fn from_indices(mut indices: Vec<u32>, width: u32) -> Self {
        indices.sort_unstable();
        indices.dedup();
        let mut runs: Vec<Run> = Vec::new();
        for idx in indices {
            let (x, y) = (idx % width, idx / width);
            match runs.last_mut() {
                Some(r) if r.y == y && r.x1 == x => r.x1 += 1,
                _ => runs.push(Run { y, x0: x, x1: x + 1 }),
            }
        }
        Self { runs }
    }

    /// Build from arbitrary runs; they are sorted and coalesced.
    pub fn from_runs(mut input: Vec<Run>) -> Self {
        input.retain(|r| !r.is_empty());
        input.sort_unstable();
        let mut runs: Vec<Run> = Vec::with_capacity(input.len());
        for r in input {
            match runs.last_mut() {
                Some(last) if last.y == r.y && r.x0 <= last.x1 => last.x1 = last.x1.max(r.x1),
                _ => runs.push(r),
            }
        }
        Self { runs }
    }

    /// Every pixel of a (non-negative) box.
    pub fn from_box(b: &BoundingBox) -> Self {
        let runs = (0..b.h)
            .map(|dy| Run {
                y: b.y as u32 + dy,
                x0: b.x as u32,
                x1: b.x as u32 + b.w,
            })
            .collect();
        Self::from_runs(runs)
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().map(|r| r.len() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Tight bounding box, or `None` for the empty set.
    pub fn bbox(&self) -> Option<BoundingBox> {
        let first = self.runs.first()?;
        let last = self.runs.last()?;
        let x0 = self.runs.iter().map(|r| r.x0).min()?;
        let x1 = self.runs.iter().map(|r| r.x1).max()?;
        Some(BoundingBox::from_corners(
            x0 as i64,
            first.y as i64,
            x1 as i64,
            last.y as i64 + 1,
        ))
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (r.x0..r.x1).map(move |x| (x, r.y)))
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        let i = self.runs.partition_point(|r| (r.y, r.x1) <= (y, x));
        self.runs
            .get(i)
            .is_some_and(|r| r.y == y && r.x0 <= x && x < r.x1)
    }

    /// Replicate every pixel into a `factor × factor` block.
    pub fn scaled(&self, factor: u32) -> RunMask {
        if factor == 1 {
            return self.clone();
        }
        let runs = self
            .runs
            .iter()
            .flat_map(|r| {
                (0..factor).map(move |dy| Run {
                    y: r.y * factor + dy,
                    x0: r.x0 * factor,
                    x1: r.x1 * factor,
                })
            })
            .collect();
        Self::from_runs(runs)
    }

    pub fn translated(&self, dx: i64, dy: i64) -> RunMask {
        let runs = self
            .runs
            .iter()
            .map(|r| Run {
                y: (r.y as i64 + dy) as u32,
                x0: (r.x0 as i64 + dx) as u32,
                x1: (r.x1 as i64 + dx) as u32,
            })
            .collect();
        Self { runs }
    }

    /// True when every pixel lies inside `[0, width) × [0, height)`.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.runs.iter().all(|r| r.y < height && r.x1 <= width)
    }

    /// True if `self ⊆ other`.
    pub fn is_subset_of(&self, other: &RunMask) -> bool {
        let mut j = 0;
        for r in &self.runs {
            while j < other.runs.len() && (other.runs[j].y, other.runs[j].x1) <= (r.y, r.x0) {
                j += 1;
            }
            match other.runs.get(j) {
                Some(o) if o.y == r.y && o.x0 <= r.x0 && r.x1 <= o.x1 => {}
                _ => return false,
            }
        }
        true
    }

    /// Number of shared pixels.
    pub fn intersection_area(&self, other: &RunMask) -> u64 {
        let (mut i, mut j, mut n) = (0, 0, 0u64);
        while i < self.runs.len() && j < other.runs.len() {
            let (a, b) = (self.runs[i], other.runs[j]);
            if a.y != b.y {
                if a.y < b.y {
                    i += 1;
                } else {
                    j += 1;
                }
                continue;
            }
            let lo = a.x0.max(b.x0);
            let hi = a.x1.min(b.x1);
            if hi > lo {
                n += (hi - lo) as u64;
            }
            if a.x1 <= b.x1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_to_runs() {
        // 4-wide raster: row 0 cols 1,2 ; row 1 col 0 and 3
        let m = RunMask::from_indices(vec![2, 1, 4, 7], 4);
        assert_eq!(
            m.runs(),
            &[
                Run { y: 0, x0: 1, x1: 3 },
                Run { y: 1, x0: 0, x1: 1 },
                Run { y: 1, x0: 3, x1: 4 }
            ]
        );
        assert_eq!(m.area(), 4);
        assert_eq!(m.bbox(), Some(BoundingBox::new(0, 0, 4, 2)));
        assert!(m.contains(2, 0) && m.contains(3, 1) && !m.contains(1, 1));
    }

    #[test]
    fn scaling_replicates() {
        let m = RunMask::from_indices(vec![0], 3);
        let s = m.scaled(4);
        assert_eq!(s.area(), 16);
        assert_eq!(s.bbox(), Some(BoundingBox::new(0, 0, 4, 4)));
    }

    #[test]
    fn subset_and_intersection() {
        let big = RunMask::from_box(&BoundingBox::new(0, 0, 4, 4));
        let small = RunMask::from_box(&BoundingBox::new(1, 1, 2, 2));
        let off = RunMask::from_box(&BoundingBox::new(3, 3, 2, 2));
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
        assert!(!off.is_subset_of(&big));
        assert_eq!(big.intersection_area(&off), 1);
        assert_eq!(small.intersection_area(&big), 4);
    }
}
