//! Pipeline configuration in a flat `section.key = value` text format.
//!
//! Every tunable has a default, unknown keys are rejected, and
//! [`PipelineConfig::to_text`] writes every key so a saved snapshot alone
//! reproduces a run. Floats use Rust's shortest round-trip formatting, which
//! makes parse → serialize → parse the identity.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::augment::AugmentParams;
use crate::error::{Error, Result};
use crate::eval::{AnnotationFormat, OperatingPoint};
use crate::fusion::FusionParams;
use crate::imaging::{Downsample, DEFAULT_PYRAMID_LEVELS};
use crate::mrmser::MrMserParams;
use crate::mser::PolarityMode;
use crate::roughset::ObjectPolarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoughsetInput {
    #[default]
    Image,
    Confidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Stability,
    Uniform,
}

/// Which regions the confidence map stacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StackSource {
    /// Every filtered region from every pyramid level, before cross-scale
    /// dedup, so a vehicle found at several scales is corroborated.
    #[default]
    Scales,
    /// Only the deduplicated MR-MSER survivors.
    Merged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughsetConfig {
    pub enabled: bool,
    pub granule_w: u32,
    pub granule_h: u32,
    pub polarity: ObjectPolarity,
    pub min_object_fraction: f64,
    pub input: RoughsetInput,
}

impl Default for RoughsetConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            granule_w: 2,
            granule_h: 2,
            polarity: ObjectPolarity::Dark,
            min_object_fraction: 0.5,
            input: RoughsetInput::Image,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceConfig {
    pub tau: f64,
    pub weighting: Weighting,
    pub stack: StackSource,
    /// Stack the expanded square boxes instead of the region pixel masks.
    pub use_expanded: bool,
    /// Keep at most this many proposals per image (0 keeps all).
    pub max_proposals: usize,
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            weighting: Weighting::Stability,
            stack: StackSource::Scales,
            use_expanded: false,
            max_proposals: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub operating_point: OperatingPoint,
    pub format: AnnotationFormat,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            operating_point: OperatingPoint::default(),
            format: AnnotationFormat::YoloTxt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub images: u32,
    pub width: u32,
    pub height: u32,
    pub vehicles: u32,
    pub min_size: u32,
    pub max_size: u32,
    pub background_min: u8,
    pub background_max: u8,
    pub vehicle_min: u8,
    pub vehicle_max: u8,
    pub noise_sigma: f64,
    pub occlusion: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            images: 1,
            width: 1024,
            height: 768,
            vehicles: 10,
            min_size: 12,
            max_size: 32,
            background_min: 200,
            background_max: 240,
            vehicle_min: 20,
            vehicle_max: 60,
            noise_sigma: 8.0,
            occlusion: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub pyramid_levels: usize,
    pub downsample: Downsample,
    pub mrmser: MrMserParams,
    pub roughset: RoughsetConfig,
    pub augment: AugmentParams,
    /// Write augmented patches and their manifest during `propose`.
    pub augment_export: bool,
    pub confidence: ConfidenceConfig,
    pub fusion: FusionParams,
    pub eval: EvalConfig,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            pyramid_levels: DEFAULT_PYRAMID_LEVELS,
            downsample: Downsample::BlockMean,
            mrmser: MrMserParams::default(),
            roughset: RoughsetConfig::default(),
            augment: AugmentParams::default(),
            augment_export: false,
            confidence: ConfidenceConfig::default(),
            fusion: FusionParams::default(),
            eval: EvalConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn bad(key: &str, v: &str) -> Error {
    Error::Config(format!("{key}: invalid value {v:?}"))
}

impl PipelineConfig {
    /// Every key in canonical order, paired with its current value.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let m = &self.mrmser.mser;
        let r = &self.roughset;
        let a = &self.augment;
        let c = &self.confidence;
        let f = &self.fusion;
        let s = &self.synth;
        vec![
            ("seed", self.seed.to_string()),
            ("pyramid.levels", self.pyramid_levels.to_string()),
            ("pyramid.decimate", (self.downsample == Downsample::Decimate).to_string()),
            ("mser.delta", m.delta.to_string()),
            ("mser.min_area", m.min_area.to_string()),
            ("mser.max_area_fraction", m.max_area_fraction.to_string()),
            ("mser.max_variation", m.max_variation.to_string()),
            ("mser.min_diversity", m.min_diversity.to_string()),
            ("mser.polarity", m.polarity.as_str().to_string()),
            ("mrmser.dedup_iou", self.mrmser.dedup_iou.to_string()),
            ("roughset.enabled", r.enabled.to_string()),
            ("roughset.granule_w", r.granule_w.to_string()),
            ("roughset.granule_h", r.granule_h.to_string()),
            ("roughset.polarity", r.polarity.as_str().to_string()),
            ("roughset.min_object_fraction", r.min_object_fraction.to_string()),
            (
                "roughset.input",
                match r.input {
                    RoughsetInput::Image => "image",
                    RoughsetInput::Confidence => "confidence",
                }
                .to_string(),
            ),
            ("augment.expansions", join(&a.expansions)),
            ("augment.patch_side", a.patch_side.to_string()),
            ("augment.rotations_per_patch", a.rotations_per_patch.to_string()),
            ("augment.angle_min", a.angle_range.0.to_string()),
            ("augment.angle_max", a.angle_range.1.to_string()),
            ("augment.export", self.augment_export.to_string()),
            ("confidence.tau", c.tau.to_string()),
            (
                "confidence.weighting",
                match c.weighting {
                    Weighting::Stability => "stability",
                    Weighting::Uniform => "uniform",
                }
                .to_string(),
            ),
            (
                "confidence.stack",
                match c.stack {
                    StackSource::Scales => "scales",
                    StackSource::Merged => "merged",
                }
                .to_string(),
            ),
            ("confidence.use_expanded", c.use_expanded.to_string()),
            ("confidence.max_proposals", c.max_proposals.to_string()),
            ("fusion.overlap_iou", f.overlap_iou.to_string()),
            ("fusion.boost", f.boost.to_string()),
            ("fusion.damp", f.damp.to_string()),
            ("fusion.score_floor", f.score_floor.to_string()),
            ("fusion.nms_iou", f.nms_iou.to_string()),
            ("eval.operating_point", self.eval.operating_point.to_string()),
            (
                "eval.format",
                match self.eval.format {
                    AnnotationFormat::YoloTxt => "yolo-txt",
                    AnnotationFormat::CocoJson => "coco-json",
                }
                .to_string(),
            ),
            ("synth.images", s.images.to_string()),
            ("synth.width", s.width.to_string()),
            ("synth.height", s.height.to_string()),
            ("synth.vehicles", s.vehicles.to_string()),
            ("synth.min_size", s.min_size.to_string()),
            ("synth.max_size", s.max_size.to_string()),
            ("synth.background_min", s.background_min.to_string()),
            ("synth.background_max", s.background_max.to_string()),
            ("synth.vehicle_min", s.vehicle_min.to_string()),
            ("synth.vehicle_max", s.vehicle_max.to_string()),
            ("synth.noise_sigma", s.noise_sigma.to_string()),
            ("synth.occlusion", s.occlusion.to_string()),
        ]
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let m = &mut self.mrmser.mser;
        match key {
            "seed" => {
                self.seed = num(key, v)?;
                self.augment.seed = self.seed;
            }
            "pyramid.levels" => self.pyramid_levels = num(key, v)?,
            "pyramid.decimate" => {
                self.downsample = if boolean(key, v)? {
                    Downsample::Decimate
                } else {
                    Downsample::BlockMean
                }
            }
            "mser.delta" => m.delta = num(key, v)?,
            "mser.min_area" => m.min_area = num(key, v)?,
            "mser.max_area_fraction" => m.max_area_fraction = num(key, v)?,
            "mser.max_variation" => m.max_variation = num(key, v)?,
            "mser.min_diversity" => m.min_diversity = num(key, v)?,
            "mser.polarity" => m.polarity = PolarityMode::parse(v).ok_or_else(|| bad(key, v))?,
            "mrmser.dedup_iou" => self.mrmser.dedup_iou = num(key, v)?,
            "roughset.enabled" => self.roughset.enabled = boolean(key, v)?,
            "roughset.granule_w" => self.roughset.granule_w = num(key, v)?,
            "roughset.granule_h" => self.roughset.granule_h = num(key, v)?,
            "roughset.polarity" => {
                self.roughset.polarity = ObjectPolarity::parse(v).ok_or_else(|| bad(key, v))?
            }
            "roughset.min_object_fraction" => self.roughset.min_object_fraction = num(key, v)?,
            "roughset.input" => {
                self.roughset.input = match v {
                    "image" => RoughsetInput::Image,
                    "confidence" => RoughsetInput::Confidence,
                    _ => return Err(bad(key, v)),
                }
            }
            "augment.expansions" => self.augment.expansions = list(key, v)?,
            "augment.patch_side" => self.augment.patch_side = num(key, v)?,
            "augment.rotations_per_patch" => self.augment.rotations_per_patch = num(key, v)?,
            "augment.angle_min" => self.augment.angle_range.0 = num(key, v)?,
            "augment.angle_max" => self.augment.angle_range.1 = num(key, v)?,
            "augment.export" => self.augment_export = boolean(key, v)?,
            "confidence.tau" => self.confidence.tau = num(key, v)?,
            "confidence.weighting" => {
                self.confidence.weighting = match v {
                    "stability" => Weighting::Stability,
                    "uniform" => Weighting::Uniform,
                    _ => return Err(bad(key, v)),
                }
            }
            "confidence.stack" => {
                self.confidence.stack = match v {
                    "scales" => StackSource::Scales,
                    "merged" => StackSource::Merged,
                    _ => return Err(bad(key, v)),
                }
            }
            "confidence.use_expanded" => self.confidence.use_expanded = boolean(key, v)?,
            "confidence.max_proposals" => self.confidence.max_proposals = num(key, v)?,
            "fusion.overlap_iou" => self.fusion.overlap_iou = num(key, v)?,
            "fusion.boost" => self.fusion.boost = num(key, v)?,
            "fusion.damp" => self.fusion.damp = num(key, v)?,
            "fusion.score_floor" => self.fusion.score_floor = num(key, v)?,
            "fusion.nms_iou" => self.fusion.nms_iou = num(key, v)?,
            "eval.operating_point" => {
                self.eval.operating_point =
                    OperatingPoint::parse(v).map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "eval.format" => {
                self.eval.format =
                    AnnotationFormat::parse(v).map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "synth.images" => self.synth.images = num(key, v)?,
            "synth.width" => self.synth.width = num(key, v)?,
            "synth.height" => self.synth.height = num(key, v)?,
            "synth.vehicles" => self.synth.vehicles = num(key, v)?,
            "synth.min_size" => self.synth.min_size = num(key, v)?,
            "synth.max_size" => self.synth.max_size = num(key, v)?,
            "synth.background_min" => self.synth.background_min = num(key, v)?,
            "synth.background_max" => self.synth.background_max = num(key, v)?,
            "synth.vehicle_min" => self.synth.vehicle_min = num(key, v)?,
            "synth.vehicle_max" => self.synth.vehicle_max = num(key, v)?,
            "synth.noise_sigma" => self.synth.noise_sigma = num(key, v)?,
            "synth.occlusion" => self.synth.occlusion = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
        self.set(k.trim(), v.trim())
    }

    /// Parse text on top of the defaults. `#` starts a comment line.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{file}:{}: expected key = value", i + 1))
            })?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("{file}:{}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut section = "";
        for (k, v) in self.entries() {
            let sec = k.split_once('.').map_or("", |(s, _)| s);
            if sec != section && !s.is_empty() {
                s.push('\n');
            }
            section = sec;
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if self.pyramid_levels == 0 {
            return Err(Error::Config("pyramid.levels must be >= 1".into()));
        }
        self.mrmser.validate().map_err(cfg_err)?;
        self.augment.validate().map_err(cfg_err)?;
        self.fusion.validate().map_err(cfg_err)?;
        let r = &self.roughset;
        if r.granule_w == 0 || r.granule_h == 0 {
            return Err(Error::Config("roughset granule dims must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&r.min_object_fraction) {
            return Err(Error::Config("roughset.min_object_fraction must be in [0,1]".into()));
        }
        if !(self.confidence.tau > 0.0 && self.confidence.tau <= 1.0) {
            return Err(Error::Config("confidence.tau must be in (0,1]".into()));
        }
        let s = &self.synth;
        if s.width == 0 || s.height == 0 {
            return Err(Error::Config("synth dims must be >= 1".into()));
        }
        if s.min_size == 0 || s.min_size > s.max_size {
            return Err(Error::Config("synth sizes must satisfy 1 <= min_size <= max_size".into()));
        }
        if s.background_min > s.background_max || s.vehicle_min > s.vehicle_max {
            return Err(Error::Config("synth intensity ranges must satisfy min <= max".into()));
        }
        if s.noise_sigma.is_nan() || s.noise_sigma < 0.0 || !(0.0..1.0).contains(&s.occlusion) {
            return Err(Error::Config("synth.noise_sigma must be >= 0 and synth.occlusion in [0,1)".into()));
        }
        Ok(())
    }
}
