//! Annotation loading and the detection metric suite: greedy IoU matching,
//! precision/recall, COCO 101-point AP, mAP50 and mAP50-95.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::Detection;
use crate::imaging::{round_half_up, BoundingBox};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub image_id: String,
    pub boxes: Vec<BoundingBox>,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationFormat {
    YoloTxt,
    CocoJson,
}

impl AnnotationFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "yolo-txt" | "yolo" => Ok(Self::YoloTxt),
            "coco-json" | "coco" => Ok(Self::CocoJson),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Parse YOLO lines `class cx cy w h` (normalized) into absolute boxes.
///
/// Box edges are rounded half-up and clipped to the image.
pub fn parse_yolo(text: &str, file: &str, image_id: &str, dims: (u32, u32)) -> Result<GroundTruth> {
    let (width, height) = dims;
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(file, i + 1, format!("expected 5 fields, found {}", fields.len())));
        }
        let mut v = [0.0f64; 4];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f
                .parse()
                .map_err(|_| Error::parse(file, i + 1, format!("bad number {f:?}")))?;
            if !(0.0..=1.0).contains(slot) {
                return Err(Error::NormalizedOutOfRange(*slot));
            }
        }
        let [cx, cy, w, h] = v;
        let (fw, fh) = (width as f64, height as f64);
        let x0 = round_half_up((cx - w / 2.0) * fw).clamp(0, width as i64);
        let y0 = round_half_up((cy - h / 2.0) * fh).clamp(0, height as i64);
        let x1 = round_half_up((cx + w / 2.0) * fw).clamp(0, width as i64);
        let y1 = round_half_up((cy + h / 2.0) * fh).clamp(0, height as i64);
        let b = BoundingBox::from_corners(x0, y0, x1, y1);
        if b.is_empty() {
            log::warn!("{file}:{}: box collapses to zero size, skipped", i + 1);
            continue;
        }
        boxes.push(b);
    }
    Ok(GroundTruth {
        image_id: image_id.to_string(),
        boxes,
        width,
        height,
    })
}

#[derive(Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    #[serde(default)]
    annotations: Vec<CocoAnnotation>,
}

#[derive(Deserialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct CocoAnnotation {
    image_id: u64,
    bbox: [f64; 4],
}

/// Parse a COCO-style file; image ids become file-name stems.
pub fn parse_coco(text: &str, file: &str) -> Result<Vec<GroundTruth>> {
    let coco: CocoFile =
        serde_json::from_str(text).map_err(|e| Error::parse(file, e.line(), e.to_string()))?;
    let mut by_id: BTreeMap<u64, GroundTruth> = BTreeMap::new();
    for img in &coco.images {
        let stem = Path::new(&img.file_name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| img.file_name.clone());
        by_id.insert(
            img.id,
            GroundTruth {
                image_id: stem,
                boxes: Vec::new(),
                width: img.width,
                height: img.height,
            },
        );
    }
    for (i, a) in coco.annotations.iter().enumerate() {
        let gt = by_id.get_mut(&a.image_id).ok_or_else(|| {
            Error::parse(file, 0, format!("annotation {i} refers to unknown image {}", a.image_id))
        })?;
        let [x, y, w, h] = a.bbox;
        let b = BoundingBox::from_corners(
            round_half_up(x),
            round_half_up(y),
            round_half_up(x + w),
            round_half_up(y + h),
        );
        match b.clamp_to(gt.width, gt.height) {
            Some(b) => gt.boxes.push(b),
            None => log::warn!("{file}: annotation {i} lies outside its image, skipped"),
        }
    }
    let mut out: Vec<GroundTruth> = by_id.into_values().collect();
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(out)
}

/// Load annotations. YOLO files need the image dimensions and yield one entry
/// named after the file stem; COCO files yield one entry per listed image.
pub fn load_annotations(
    path: impl AsRef<Path>,
    format: AnnotationFormat,
    dims: Option<(u32, u32)>,
) -> Result<Vec<GroundTruth>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    match format {
        AnnotationFormat::YoloTxt => {
            let dims = dims.ok_or_else(|| {
                Error::InvalidParam(format!("{file}: yolo annotations need image dimensions"))
            })?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(vec![parse_yolo(&text, &file, &stem, dims)?])
        }
        AnnotationFormat::CocoJson => parse_coco(&text, &file),
    }
}

/// Write boxes back as YOLO lines with class 0.
pub fn to_yolo(gt: &GroundTruth) -> String {
    let (fw, fh) = (gt.width as f64, gt.height as f64);
    let mut s = String::new();
    for b in &gt.boxes {
        let (cx, cy) = b.center();
        writeln!(
            s,
            "0 {:.6} {:.6} {:.6} {:.6}",
            cx / fw,
            cy / fh,
            b.w as f64 / fw,
            b.h as f64 / fh
        )
        .unwrap();
    }
    s
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn add(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `(score, is_tp)` in descending score order.
    pub scored: Vec<(f64, bool)>,
    /// For each GT box, the index into `scored` that claimed it.
    pub gt_match: Vec<Option<usize>>,
    pub counts: Counts,
}

fn det_order(a: &Detection, b: &Detection) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| (a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h).cmp(&(b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h)))
}

/// Greedy one-to-one matching of one image's detections against its boxes.
pub fn match_detections(dets: &[&Detection], gt: &[BoundingBox], iou_threshold: f64) -> MatchResult {
    let mut order: Vec<&Detection> = dets.to_vec();
    order.sort_by(|a, b| det_order(a, b));
    let mut gt_match = vec![None; gt.len()];
    let mut scored = Vec::with_capacity(order.len());
    for (di, d) in order.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gt.iter().enumerate() {
            if gt_match[gi].is_some() {
                continue;
            }
            let v = d.bbox.iou(g);
            if v >= iou_threshold && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            gt_match[gi] = Some(di);
        }
        scored.push((d.score, best.is_some()));
    }
    let tp = scored.iter().filter(|s| s.1).count();
    MatchResult {
        counts: Counts {
            tp,
            fp: scored.len() - tp,
            fn_: gt.len() - tp,
        },
        scored,
        gt_match,
    }
}

/// Detections grouped per image id, alongside the boxes of that image.
/// Images without annotations contribute zero boxes.
fn group<'a>(dets: &'a [Detection], gts: &'a [GroundTruth]) -> Vec<(Vec<&'a Detection>, &'a [BoundingBox])> {
    let mut groups: BTreeMap<&str, (Vec<&Detection>, &[BoundingBox])> = BTreeMap::new();
    for g in gts {
        groups.entry(g.image_id.as_str()).or_insert((Vec::new(), &[])).1 = &g.boxes;
    }
    for d in dets {
        groups.entry(d.image_id.as_str()).or_insert((Vec::new(), &[])).0.push(d);
    }
    groups.into_values().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    /// Score of the last detection admitted at this point.
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrCurve {
    pub iou_threshold: f64,
    pub num_gt: usize,
    /// One point per distinct score, in descending score order.
    pub points: Vec<PrPoint>,
    #[serde(skip)]
    cum: Vec<(usize, usize)>,
}

impl PrCurve {
    /// Counts for detections scored at or above `t`.
    pub fn counts_at(&self, t: f64) -> Counts {
        let idx = self.points.partition_point(|p| p.threshold >= t);
        let (tp, fp) = if idx == 0 { (0, 0) } else { self.cum[idx - 1] };
        Counts {
            tp,
            fp,
            fn_: self.num_gt - tp,
        }
    }

    /// Precision made non-increasing in recall by taking the max to the right.
    pub fn interpolated(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.points.iter().map(|p| p.precision).collect();
        for i in (0..p.len().saturating_sub(1)).rev() {
            p[i] = p[i].max(p[i + 1]);
        }
        p
    }

    /// COCO 101-point average precision.
    pub fn average_precision(&self) -> f64 {
        if self.num_gt == 0 {
            return if self.points.is_empty() { 1.0 } else { 0.0 };
        }
        let interp = self.interpolated();
        let mut sum = 0.0;
        let mut j = 0;
        for i in 0..=100 {
            let r = i as f64 / 100.0;
            while j < self.points.len() && self.points[j].recall < r {
                j += 1;
            }
            if j < self.points.len() {
                sum += interp[j];
            }
        }
        sum / 101.0
    }
}

/// Match every image in parallel, then sweep the pooled detections by score.
pub fn pr_curve(dets: &[Detection], gts: &[GroundTruth], iou_threshold: f64) -> PrCurve {
    let groups = group(dets, gts);
    let results: Vec<MatchResult> = groups
        .par_iter()
        .map(|(d, g)| match_detections(d, g, iou_threshold))
        .collect();
    let num_gt: usize = groups.iter().map(|(_, g)| g.len()).sum();
    let mut pooled: Vec<(f64, bool)> = results.iter().flat_map(|r| r.scored.iter().copied()).collect();
    // Stable: ties keep image order, then per-image rank.
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::new();
    let mut cum = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, &(score, hit)) in pooled.iter().enumerate() {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_tie = pooled.get(i + 1).is_none_or(|n| n.0 != score);
        if last_of_tie {
            points.push(PrPoint {
                threshold: score,
                recall: if num_gt == 0 { 0.0 } else { tp as f64 / num_gt as f64 },
                precision: tp as f64 / (tp + fp) as f64,
            });
            cum.push((tp, fp));
        }
    }
    PrCurve {
        iou_threshold,
        num_gt,
        points,
        cum,
    }
}

pub fn average_precision(dets: &[Detection], gts: &[GroundTruth], iou_threshold: f64) -> f64 {
    pr_curve(dets, gts, iou_threshold).average_precision()
}

/// Share of GT boxes matched by any detection at `iou_threshold`, ignoring
/// scores. 1.0 when there is nothing to find.
pub fn proposal_recall(dets: &[Detection], gts: &[GroundTruth], iou_threshold: f64) -> f64 {
    let c = pr_curve(dets, gts, iou_threshold);
    if c.num_gt == 0 {
        return 1.0;
    }
    c.counts_at(f64::NEG_INFINITY).tp as f64 / c.num_gt as f64
}

/// The ten IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// `(mAP50, mAP50-95)`.
pub fn map_range(dets: &[Detection], gts: &[GroundTruth]) -> (f64, f64) {
    let aps: Vec<f64> = coco_thresholds()
        .iter()
        .map(|&t| average_precision(dets, gts, t))
        .collect();
    (aps[0], aps.iter().sum::<f64>() / aps.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatingPoint {
    Fixed(f64),
    BestF1,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        Self::Fixed(0.25)
    }
}

impl OperatingPoint {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "best-f1" {
            return Ok(Self::BestF1);
        }
        let t = s
            .strip_prefix("fixed:")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|t| (0.0..=1.0).contains(t))
            .ok_or_else(|| Error::InvalidParam(format!("operating point {s:?}: expected fixed:<t> or best-f1")))?;
        Ok(Self::Fixed(t))
    }
}

impl std::fmt::Display for OperatingPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Fixed(t) => write!(f, "fixed:{t}"),
            Self::BestF1 => f.write_str("best-f1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub map50: f64,
    pub map50_95: f64,
    pub score_threshold: f64,
    pub counts: Counts,
    /// Set when precision or recall fell back to a 0/0 convention.
    pub degenerate: bool,
    pub ap_per_threshold: Vec<(f64, f64)>,
    pub pr_curves: Vec<PrCurve>,
}

/// Precision and recall from counts, with the empty-set conventions:
/// nothing to find and nothing found is perfect; otherwise an empty
/// denominator gives precision 0 or recall 1.
pub fn precision_recall(c: Counts) -> (f64, f64, bool) {
    let found = c.tp + c.fp;
    let total = c.tp + c.fn_;
    match (found, total) {
        (0, 0) => (1.0, 1.0, true),
        (0, _) => (0.0, 0.0, true),
        (_, 0) => (0.0, 1.0, true),
        _ => (c.tp as f64 / found as f64, c.tp as f64 / total as f64, false),
    }
}

fn best_f1_threshold(curve: &PrCurve) -> f64 {
    let mut best = (f64::NEG_INFINITY, 1.0);
    for p in &curve.points {
        let f1 = if p.precision + p.recall > 0.0 {
            2.0 * p.precision * p.recall / (p.precision + p.recall)
        } else {
            0.0
        };
        if f1 > best.0 {
            best = (f1, p.threshold);
        }
    }
    best.1
}

pub fn report(dets: &[Detection], gts: &[GroundTruth], op: OperatingPoint) -> MetricsReport {
    let pr_curves: Vec<PrCurve> = coco_thresholds()
        .iter()
        .map(|&t| pr_curve(dets, gts, t))
        .collect();
    let ap_per_threshold: Vec<(f64, f64)> = pr_curves
        .iter()
        .map(|c| (c.iou_threshold, c.average_precision()))
        .collect();
    let map50 = ap_per_threshold[0].1;
    let map50_95 = ap_per_threshold.iter().map(|a| a.1).sum::<f64>() / ap_per_threshold.len() as f64;
    let score_threshold = match op {
        OperatingPoint::Fixed(t) => t,
        OperatingPoint::BestF1 => best_f1_threshold(&pr_curves[0]),
    };
    let counts = pr_curves[0].counts_at(score_threshold);
    let (precision, recall, degenerate) = precision_recall(counts);
    MetricsReport {
        precision,
        recall,
        map50,
        map50_95,
        score_threshold,
        counts,
        degenerate,
        ap_per_threshold,
        pr_curves,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// PR curves as `iou,threshold,recall,precision` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iou,threshold,recall,precision\n");
        for c in &self.pr_curves {
            for p in &c.points {
                writeln!(s, "{:.2},{:.9},{:.9},{:.9}", c.iou_threshold, p.threshold, p.recall, p.precision).unwrap();
            }
        }
        s
    }

    /// Single-row table in the order Precision, Recall, mAP50, mAP50-95.
    pub fn table(&self) -> String {
        let flag = if self.degenerate { " (degenerate)" } else { "" };
        format!(
            "{:>10} {:>10} {:>10} {:>10}\n{:>10.4} {:>10.4} {:>10.4} {:>10.4}{flag}\n",
            "Precision", "Recall", "mAP50", "mAP50-95", self.precision, self.recall, self.map50, self.map50_95
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: i32, y: i32, w: u32, h: u32) -> BoundingBox {
        BoundingBox::new(x, y, w, h)
    }

    fn gt(id: &str, boxes: Vec<BoundingBox>) -> GroundTruth {
        GroundTruth {
            image_id: id.into(),
            boxes,
            width: 1000,
            height: 1000,
        }
    }

    fn det(id: &str, bb: BoundingBox, s: f64) -> Detection {
        Detection::new(id, bb, s)
    }

    #[test]
    fn yolo_line() {
        let g = parse_yolo("0 0.5 0.5 0.25 0.5\n", "a.txt", "a", (640, 480)).unwrap();
        assert_eq!(g.boxes, vec![b(240, 120, 160, 240)]);
        assert!(parse_yolo("", "e.txt", "e", (10, 10)).unwrap().boxes.is_empty());
        let err = parse_yolo("0 0.5 0.5 1.5 0.5", "x.txt", "x", (10, 10)).unwrap_err();
        assert!(err.to_string().starts_with("normalized value outside [0,1]"));
        let err = parse_yolo("0 0.5 0.5\n", "m.txt", "m", (10, 10)).unwrap_err();
        assert!(err.to_string().starts_with("m.txt:1:"), "{err}");
        assert!(matches!(AnnotationFormat::parse("voc"), Err(Error::UnknownFormat(_))));
    }

    #[test]
    fn yolo_round_trip() {
        let g = gt("r", vec![b(10, 20, 30, 40), b(0, 0, 7, 9)]);
        let back = parse_yolo(&to_yolo(&g), "r.txt", "r", (1000, 1000)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn coco_file() {
        let text = r#"{"images":[{"id":7,"file_name":"f7.png","width":100,"height":50}],
            "annotations":[{"image_id":7,"bbox":[1.0,2.0,3.0,4.0]}]}"#;
        let g = parse_coco(text, "c.json").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].image_id, "f7");
        assert_eq!(g[0].boxes, vec![b(1, 2, 3, 4)]);
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&b(0, 0, 2, 2), &b(0, 0, 2, 2)), 1.0);
        assert_eq!(iou(&b(0, 0, 2, 2), &b(5, 5, 2, 2)), 0.0);
        assert!((iou(&b(0, 0, 2, 2), &b(1, 1, 2, 2)) - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn matching_examples() {
        let g = [b(0, 0, 10, 10)];
        let d1 = det("a", b(0, 0, 10, 10), 0.9);
        assert_eq!(match_detections(&[&d1], &g, 0.5).counts, Counts { tp: 1, fp: 0, fn_: 0 });
        let d2 = det("a", b(0, 0, 10, 10), 0.8);
        assert_eq!(match_detections(&[&d1, &d2], &g, 0.5).counts, Counts { tp: 1, fp: 1, fn_: 0 });
        // 9x10 box shifted by 1 row: inter 81, union 100+90-81
        let d3 = det("a", b(0, 5, 10, 9), 0.9);
        let v = iou(&d3.bbox, &g[0]);
        assert!(v < 0.5);
        assert_eq!(match_detections(&[&d3], &g, 0.5).counts, Counts { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn ap_examples() {
        let g = vec![gt("a", vec![b(0, 0, 10, 10)])];
        assert_eq!(average_precision(&[det("a", b(0, 0, 10, 10), 1.0)], &g, 0.5), 1.0);
        assert_eq!(average_precision(&[], &g, 0.5), 0.0);
        let dets = [det("a", b(50, 50, 10, 10), 0.9), det("a", b(0, 0, 10, 10), 0.8)];
        assert_eq!(average_precision(&dets, &g, 0.5), 0.5);
    }

    #[test]
    fn map_at_055() {
        // 10 x 20 box against 10 x 11 inside it: IoU 110/200 = 0.55
        let g = vec![gt("a", vec![b(0, 0, 10, 20)])];
        let dets = [det("a", b(0, 0, 10, 11), 1.0)];
        let (m50, m5095) = map_range(&dets, &g);
        assert_eq!(m50, 1.0);
        assert!((m5095 - 0.2).abs() < 1e-12);
        assert_eq!(map_range(&[], &g), (0.0, 0.0));
    }

    #[test]
    fn report_examples() {
        let g = vec![gt("a", vec![b(0, 0, 10, 10), b(20, 0, 10, 10), b(40, 0, 10, 10), b(60, 0, 10, 10)])];
        let dets = vec![
            det("a", b(0, 0, 10, 10), 0.9),
            det("a", b(20, 0, 10, 10), 0.8),
            det("a", b(200, 0, 10, 10), 0.7),
            det("a", b(300, 0, 10, 10), 0.1),
        ];
        let r = report(&dets, &g, OperatingPoint::default());
        assert_eq!(r.counts, Counts { tp: 2, fp: 1, fn_: 2 });
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.recall, 0.5);
        assert!(!r.degenerate);

        let empty = report(&[], &[gt("z", vec![])], OperatingPoint::default());
        assert_eq!((empty.precision, empty.recall), (1.0, 1.0));
        assert!(empty.degenerate);

        let none = report(&[], &g, OperatingPoint::default());
        assert_eq!((none.precision, none.recall, none.map50, none.map50_95), (0.0, 0.0, 0.0, 0.0));
        assert!(none.degenerate);
    }

    #[test]
    fn best_f1_point() {
        let g = vec![gt("a", vec![b(0, 0, 10, 10), b(20, 0, 10, 10)])];
        let dets = vec![
            det("a", b(0, 0, 10, 10), 0.9),
            det("a", b(20, 0, 10, 10), 0.2),
            det("a", b(300, 0, 10, 10), 0.1),
        ];
        let fixed = report(&dets, &g, OperatingPoint::default());
        assert_eq!(fixed.recall, 0.5);
        let best = report(&dets, &g, OperatingPoint::BestF1);
        assert_eq!(best.score_threshold, 0.2);
        assert_eq!((best.precision, best.recall), (1.0, 1.0));
    }

    #[test]
    fn operating_point_parse() {
        assert_eq!(OperatingPoint::parse("fixed:0.25").unwrap(), OperatingPoint::Fixed(0.25));
        assert_eq!(OperatingPoint::parse("best-f1").unwrap(), OperatingPoint::BestF1);
        assert!(OperatingPoint::parse("fixed:2").is_err());
        assert!(OperatingPoint::parse("f1").is_err());
    }

    #[test]
    fn csv_and_table() {
        let g = vec![gt("a", vec![b(0, 0, 10, 10)])];
        let r = report(&[det("a", b(0, 0, 10, 10), 1.0)], &g, OperatingPoint::default());
        let csv = r.to_csv();
        assert!(csv.starts_with("iou,threshold,recall,precision\n0.50,1.000000000,1.000000000,1.000000000\n"));
        assert!(r.table().starts_with(" Precision     Recall      mAP50   mAP50-95"));
    }
}
