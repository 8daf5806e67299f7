//! Output-level fusion of external detector results with pipeline proposals.
//!
//! Each detection's score is boosted when some proposal overlaps it and damped
//! otherwise; low scores are dropped and the rest go through greedy NMS.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::confidence::Proposal;
use crate::error::{Error, Result};
use crate::imaging::BoundingBox;

pub const VEHICLE: &str = "vehicle";

/// One record of the detections JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    pub bbox: BoundingBox,
    pub score: f64,
    #[serde(default = "default_label")]
    pub label: String,
    /// Set to `"proposal"` on records emitted by the proposal stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

fn default_label() -> String {
    VEHICLE.to_string()
}

impl Detection {
    pub fn new(image_id: impl Into<String>, bbox: BoundingBox, score: f64) -> Self {
        Self {
            image_id: image_id.into(),
            bbox,
            score,
            label: default_label(),
            source: None,
        }
    }

    pub fn from_proposal(image_id: impl Into<String>, p: &Proposal) -> Self {
        Self {
            source: Some("proposal".into()),
            ..Self::new(image_id, p.bbox, p.score)
        }
    }

    /// The proposal view of a record, for fusing against a proposals file.
    pub fn to_proposal(&self) -> Proposal {
        Proposal {
            bbox: self.bbox,
            score: self.score,
            support: 0,
        }
    }
}

/// Parse a detections file; errors carry the file name and line.
pub fn parse_detections(text: &str, file: &str) -> Result<Vec<Detection>> {
    let dets: Vec<Detection> =
        serde_json::from_str(text).map_err(|e| Error::parse(file, e.line(), e.to_string()))?;
    for (i, d) in dets.iter().enumerate() {
        if !(0.0..=1.0).contains(&d.score) {
            return Err(Error::parse(
                file,
                0,
                format!("record {i}: score {} outside [0,1]", d.score),
            ));
        }
        if d.bbox.is_empty() {
            return Err(Error::parse(file, 0, format!("record {i}: empty bbox")));
        }
    }
    Ok(dets)
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text, &path.display().to_string())
}

/// Pretty JSON array, one record per line group, trailing newline.
pub fn detections_to_json(dets: &[Detection]) -> String {
    let mut s = serde_json::to_string_pretty(dets).expect("detections serialize");
    s.push('\n');
    s
}

pub fn save_detections(dets: &[Detection], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, detections_to_json(dets)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    pub overlap_iou: f64,
    /// Multiplicative bonus for corroborated detections.
    pub boost: f64,
    /// Multiplicative penalty for uncorroborated detections.
    pub damp: f64,
    pub score_floor: f64,
    pub nms_iou: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            overlap_iou: 0.3,
            boost: 0.2,
            damp: 0.5,
            score_floor: 0.05,
            nms_iou: 0.5,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.overlap_iou) || !unit(self.nms_iou) {
            return Err(Error::InvalidParam("fusion IoU thresholds must be in (0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.score_floor) {
            return Err(Error::InvalidParam("fusion.score_floor must be in [0,1]".into()));
        }
        if self.boost.is_nan() || self.boost < 0.0 {
            return Err(Error::InvalidParam("fusion.boost must be >= 0".into()));
        }
        if !unit(self.damp) {
            return Err(Error::InvalidParam("fusion.damp must be in (0,1]".into()));
        }
        Ok(())
    }
}

fn by_score_then_position(a: &Detection, b: &Detection) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| (a.bbox.x, a.bbox.y).cmp(&(b.bbox.x, b.bbox.y)))
        .then_with(|| (a.bbox.w, a.bbox.h).cmp(&(b.bbox.w, b.bbox.h)))
}

/// Greedy NMS: keep the best remaining box, suppress others at IoU >= threshold.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut sorted = dets.to_vec();
    sorted.sort_by(by_score_then_position);
    let mut keep: Vec<Detection> = Vec::with_capacity(sorted.len());
    for d in sorted {
        if keep.iter().all(|k| k.bbox.iou(&d.bbox) < iou_threshold) {
            keep.push(d);
        }
    }
    keep
}

/// Modulated score of one detection given the proposals of its image.
pub fn modulate(det: &Detection, props: &[Proposal], params: &FusionParams) -> f64 {
    let best = props
        .iter()
        .map(|p| p.bbox.iou(&det.bbox))
        .fold(0.0, f64::max);
    if best >= params.overlap_iou {
        (det.score * (1.0 + params.boost)).min(1.0)
    } else {
        det.score * params.damp
    }
}

/// Fuse the detections of a single image with that image's proposals.
pub fn fuse(dets: &[Detection], props: &[Proposal], params: &FusionParams) -> Result<Vec<Detection>> {
    if let Some(first) = dets.first() {
        if let Some(other) = dets.iter().find(|d| d.image_id != first.image_id) {
            return Err(Error::MixedImageIds(
                first.image_id.clone(),
                other.image_id.clone(),
            ));
        }
    }
    let rescored: Vec<Detection> = dets
        .iter()
        .map(|d| Detection {
            score: modulate(d, props, params),
            ..d.clone()
        })
        .filter(|d| d.score >= params.score_floor)
        .collect();
    Ok(nms(&rescored, params.nms_iou))
}
