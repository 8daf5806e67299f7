//! End-to-end orchestration: pyramid → MR-MSER → rough-entropy filter →
//! confidence map → proposals, plus the synth, fuse, eval and run commands.
//!
//! Output files never carry timestamps or timings, so two runs with the same
//! configuration produce byte-identical trees. Timings go to the log.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::augment::{augment_region, expanded_boxes, patch_file_name, PatchManifestEntry, PatchSet};
use crate::confidence::{accumulate_masks, extract_proposals, normalize, stability_weight, ConfidenceMap, Proposal};
use crate::config::{PipelineConfig, RoughsetInput, StackSource, Weighting};
use crate::error::{Error, Result};
use crate::eval::{self, to_yolo, AnnotationFormat, GroundTruth, MetricsReport};
use crate::fusion::{self, load_detections, save_detections, Detection};
use crate::imaging::{build_pyramid_with, encode_pgm, load_image, GrayImage};
use crate::mask::RunMask;
use crate::mrmser::{detect_per_level, merge_levels};
use crate::mser::{ExtremalRegion, RegionRecord};
use crate::roughset::{filter_regions, rough_entropy_threshold, ObjectPolarity, RoughnessCurve};
use crate::synth::{generate_scene, scene_id};

/// Region and proposal counts after each stage of one image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageCounts {
    pub pyramid_levels: usize,
    pub regions_per_level: Vec<usize>,
    pub regions_merged: usize,
    pub t_star: Option<u8>,
    pub regions_filtered: usize,
    pub regions_stacked: usize,
    pub proposals: usize,
}

#[derive(Debug, Clone)]
pub struct DebugArtifacts {
    pub confidence: ConfidenceMap,
    pub rst_mask: Option<GrayImage>,
    pub re_curve: Option<RoughnessCurve>,
    pub regions: Vec<RegionRecord>,
}

#[derive(Debug, Clone)]
pub struct ImageResult {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub proposals: Vec<Proposal>,
    pub counts: StageCounts,
    pub debug: Option<DebugArtifacts>,
    pub patches: Vec<PatchSet>,
}

fn footprints(regions: &[ExtremalRegion], cfg: &PipelineConfig, w: u32, h: u32) -> (Vec<RunMask>, Vec<f64>) {
    let mut masks = Vec::new();
    let mut weights = Vec::new();
    for r in regions {
        let weight = match cfg.confidence.weighting {
            Weighting::Stability => stability_weight(r),
            Weighting::Uniform => 1.0,
        };
        if cfg.confidence.use_expanded {
            for b in expanded_boxes(r, &cfg.augment) {
                if let Some(b) = b.clamp_to(w, h) {
                    masks.push(RunMask::from_box(&b));
                    weights.push(weight);
                }
            }
        } else {
            masks.push(r.pixels.clone());
            weights.push(weight);
        }
    }
    (masks, weights)
}

fn confidence_of(regions: &[ExtremalRegion], cfg: &PipelineConfig, w: u32, h: u32) -> Result<ConfidenceMap> {
    let (masks, weights) = footprints(regions, cfg, w, h);
    let refs: Vec<&RunMask> = masks.iter().collect();
    Ok(normalize(&accumulate_masks(&refs, &weights, w, h)?))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Run the proposal pipeline on one image.
pub fn propose_image(image_id: &str, img: &GrayImage, cfg: &PipelineConfig, keep_debug: bool) -> Result<ImageResult> {
    let (w, h) = img.dimensions();
    let t = Instant::now();
    let pyr = build_pyramid_with(img, cfg.pyramid_levels, cfg.downsample);
    let t_pyr = ms(t);

    let t = Instant::now();
    let per_level = detect_per_level(&pyr, &cfg.mrmser);
    let regions_per_level: Vec<usize> = per_level.iter().map(Vec::len).collect();
    let regions = merge_levels(per_level.clone(), cfg.mrmser.dedup_iou);
    let stacked: Vec<ExtremalRegion> = match cfg.confidence.stack {
        StackSource::Scales => per_level.into_iter().flatten().collect(),
        StackSource::Merged => regions.clone(),
    };
    let t_mser = ms(t);

    let t = Instant::now();
    let (kept, kept_stack, rst) = if cfg.roughset.enabled {
        let (input, polarity) = match cfg.roughset.input {
            RoughsetInput::Image => (img.clone(), cfg.roughset.polarity),
            // High confidence is the object in a confidence map.
            RoughsetInput::Confidence => (confidence_of(&stacked, cfg, w, h)?.to_image(), ObjectPolarity::Bright),
        };
        let res = rough_entropy_threshold(&input, (cfg.roughset.granule_w, cfg.roughset.granule_h), polarity)?;
        // A curve that is zero everywhere means every granule is crisp at every
        // threshold; its argmax says nothing about objects.
        let informative = res.curve.entries.iter().any(|p| p.re > 0.0);
        let (kept, kept_stack) = if informative {
            let f = cfg.roughset.min_object_fraction;
            (filter_regions(&regions, &res.mask, f), filter_regions(&stacked, &res.mask, f))
        } else {
            log::warn!("image={image_id} flat rough-entropy curve, region filter skipped");
            (regions.clone(), stacked)
        };
        (kept, kept_stack, Some(res))
    } else {
        (regions.clone(), stacked, None)
    };
    let t_rst = ms(t);

    let t = Instant::now();
    let confidence = confidence_of(&kept_stack, cfg, w, h)?;
    let mut proposals = extract_proposals(&confidence, cfg.confidence.tau);
    if cfg.confidence.max_proposals > 0 {
        proposals.truncate(cfg.confidence.max_proposals);
    }
    let t_conf = ms(t);

    let patches = if cfg.augment_export {
        kept.iter()
            .enumerate()
            .map(|(i, r)| augment_region(img, r, i as u64, &cfg.augment))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let counts = StageCounts {
        pyramid_levels: pyr.levels.len(),
        regions_per_level,
        regions_merged: regions.len(),
        t_star: rst.as_ref().map(|r| r.t_star),
        regions_filtered: kept.len(),
        regions_stacked: kept_stack.len(),
        proposals: proposals.len(),
    };
    log::info!(
        "image={image_id} pyramid_ms={t_pyr:.1} mser_ms={t_mser:.1} rst_ms={t_rst:.1} confidence_ms={t_conf:.1} \
         regions={:?} merged={} t_star={:?} kept={} proposals={}",
        counts.regions_per_level,
        counts.regions_merged,
        counts.t_star,
        counts.regions_filtered,
        counts.proposals
    );

    let debug = keep_debug.then(|| DebugArtifacts {
        confidence,
        rst_mask: rst.as_ref().map(|r| r.mask.clone()),
        re_curve: rst.map(|r| r.curve),
        regions: kept.iter().map(ExtremalRegion::record).collect(),
    });
    Ok(ImageResult {
        image_id: image_id.to_string(),
        width: w,
        height: h,
        proposals,
        counts,
        debug,
        patches,
    })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// PGM and PNG files of a directory, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
        })
        .collect();
    out.sort();
    Ok(out)
}

fn list_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    #[serde(flatten)]
    pub counts: StageCounts,
}

#[derive(Debug, Clone, Default)]
pub struct ProposeOutcome {
    /// Proposals of all images as detection records, grouped by image id.
    pub detections: Vec<Detection>,
    pub images: Vec<ImageSummary>,
    pub failures: Vec<Failure>,
}

/// Propose on every image; per-image failures are logged and collected.
///
/// Writes `proposals.json` and `summary.json` under `out`, plus `debug/` and
/// `patches/` when requested.
pub fn cmd_propose(cfg: &PipelineConfig, images: &[PathBuf], out: &Path, debug: bool) -> Result<ProposeOutcome> {
    cfg.validate()?;
    let results: Vec<(String, Result<ImageResult>)> = images
        .par_iter()
        .map(|p| {
            let id = stem(p);
            let r = load_image(p).and_then(|img| propose_image(&id, &img, cfg, debug));
            (id, r)
        })
        .collect();

    let mut outcome = ProposeOutcome::default();
    let mut manifest = Vec::new();
    let mut ordered: BTreeMap<String, ImageResult> = BTreeMap::new();
    for (id, r) in results {
        match r {
            Ok(res) => {
                ordered.insert(id, res);
            }
            Err(e) => {
                log::error!("image={id} failed: {e}");
                outcome.failures.push(Failure {
                    item: id,
                    error: e.to_string(),
                });
            }
        }
    }
    for (id, res) in &ordered {
        outcome
            .detections
            .extend(res.proposals.iter().map(|p| Detection::from_proposal(id.as_str(), p)));
        outcome.images.push(ImageSummary {
            image_id: id.clone(),
            width: res.width,
            height: res.height,
            counts: res.counts.clone(),
        });
        if let Some(d) = &res.debug {
            let dir = out.join("debug").join(id);
            write(&dir.join("confidence.pgm"), encode_pgm(&d.confidence.to_image()))?;
            if let Some(m) = &d.rst_mask {
                write(&dir.join("rst_mask.pgm"), encode_pgm(m))?;
            }
            if let Some(c) = &d.re_curve {
                write(&dir.join("re_curve.csv"), c.to_csv())?;
            }
            write(&dir.join("regions.json"), to_json(&d.regions))?;
        }
        for set in &res.patches {
            for p in &set.patches {
                let file = patch_file_name(id, set.source_region, p.expansion, p.rotation_index);
                write(&out.join("patches").join(&file), encode_pgm(&p.patch.to_image()))?;
                manifest.push(PatchManifestEntry {
                    file,
                    image: id.clone(),
                    region: set.source_region,
                    expansion: p.expansion,
                    rotation: p.rotation_index,
                    angle: p.angle,
                    bbox: p.bbox,
                });
            }
        }
    }
    if cfg.augment_export {
        write(&out.join("patches").join("manifest.json"), to_json(&manifest))?;
    }
    save_detections(&outcome.detections, out.join("proposals.json"))?;
    write(&out.join("summary.json"), to_json(&outcome.images))?;
    Ok(outcome)
}

/// Fuse per image; images without proposals fuse against an empty set.
pub fn fuse_all(cfg: &PipelineConfig, dets: &[Detection], props: &[Detection]) -> Result<Vec<Detection>> {
    cfg.fusion.validate()?;
    let mut by_image: BTreeMap<&str, (Vec<Detection>, Vec<Proposal>)> = BTreeMap::new();
    for d in dets {
        by_image.entry(&d.image_id).or_default().0.push(d.clone());
    }
    for p in props {
        if let Some(e) = by_image.get_mut(p.image_id.as_str()) {
            e.1.push(p.to_proposal());
        }
    }
    let fused: Vec<Vec<Detection>> = by_image
        .into_par_iter()
        .map(|(_, (d, p))| fusion::fuse(&d, &p, &cfg.fusion))
        .collect::<Result<_>>()?;
    Ok(fused.into_iter().flatten().collect())
}

pub fn cmd_fuse(cfg: &PipelineConfig, detections: &Path, proposals: Option<&Path>, out: &Path) -> Result<Vec<Detection>> {
    let dets = load_detections(detections)?;
    let props = match proposals {
        Some(p) => load_detections(p)?,
        None => Vec::new(),
    };
    let fused = fuse_all(cfg, &dets, &props)?;
    save_detections(&fused, out)?;
    Ok(fused)
}

/// Load ground truth. For YOLO, `labels` is a directory of `{image}.txt`
/// files whose dimensions come from the matching image in `images`; for
/// COCO it is a single JSON file.
pub fn load_ground_truth(labels: &Path, images: Option<&Path>, format: AnnotationFormat) -> Result<Vec<GroundTruth>> {
    if !labels.exists() {
        return Err(Error::io(
            labels,
            std::io::Error::new(std::io::ErrorKind::NotFound, "annotations not found"),
        ));
    }
    match format {
        AnnotationFormat::CocoJson => eval::load_annotations(labels, format, None),
        AnnotationFormat::YoloTxt => {
            let images = images.ok_or_else(|| {
                Error::InvalidParam("yolo annotations need an image directory for dimensions".into())
            })?;
            let dims: BTreeMap<String, (u32, u32)> = list_images(images)?
                .par_iter()
                .map(|p| load_image(p).map(|img| (stem(p), img.dimensions())))
                .collect::<Result<_>>()?;
            let mut out = Vec::new();
            for txt in list_ext(labels, "txt")? {
                let id = stem(&txt);
                match dims.get(&id) {
                    Some(&d) => out.extend(eval::load_annotations(&txt, format, Some(d))?),
                    None => log::warn!("{}: no matching image, skipped", txt.display()),
                }
            }
            for id in dims.keys() {
                if !out.iter().any(|g| &g.image_id == id) {
                    log::warn!("image={id}: no annotation file, counted as zero ground truth");
                }
            }
            Ok(out)
        }
    }
}

/// Evaluate detections and write `{name}.json` plus `{name}_pr.csv`.
pub fn evaluate_and_write(cfg: &PipelineConfig, dets: &[Detection], gts: &[GroundTruth], out: &Path, name: &str) -> Result<MetricsReport> {
    for d in dets {
        if !gts.iter().any(|g| g.image_id == d.image_id) {
            log::warn!("image={}: detections without annotations, counted as zero ground truth", d.image_id);
            break;
        }
    }
    let report = eval::report(dets, gts, cfg.eval.operating_point);
    write(&out.join(format!("{name}.json")), report.to_json())?;
    write(&out.join(format!("{name}_pr.csv")), report.to_csv())?;
    Ok(report)
}

pub fn cmd_eval(cfg: &PipelineConfig, detections: &Path, labels: &Path, images: Option<&Path>, out: &Path) -> Result<MetricsReport> {
    let dets = load_detections(detections)?;
    let gts = load_ground_truth(labels, images, cfg.eval.format)?;
    evaluate_and_write(cfg, &dets, &gts, out, "metrics")
}

/// Write `images/scene_NNNN.pgm` and `labels/scene_NNNN.txt` under `out`.
pub fn cmd_synth(cfg: &PipelineConfig, out: &Path) -> Result<Vec<GroundTruth>> {
    cfg.validate()?;
    let scenes = (0..cfg.synth.images)
        .into_par_iter()
        .map(|i| generate_scene(&cfg.synth, cfg.seed, i))
        .collect::<Result<Vec<_>>>()?;
    for s in &scenes {
        let id = &s.gt.image_id;
        write(&out.join("images").join(format!("{id}.pgm")), encode_pgm(&s.image))?;
        write(&out.join("labels").join(format!("{id}.txt")), to_yolo(&s.gt))?;
    }
    debug_assert!(scenes.iter().enumerate().all(|(i, s)| s.gt.image_id == scene_id(i as u32)));
    Ok(scenes.into_iter().map(|s| s.gt).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub propose: bool,
    pub fuse: bool,
    pub eval: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            propose: true,
            fuse: true,
            eval: true,
        }
    }
}

impl Stages {
    /// Comma-separated subset of `propose,fuse,eval`, or `all`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "all" {
            return Ok(Self::default());
        }
        let mut st = Self {
            propose: false,
            fuse: false,
            eval: false,
        };
        for part in s.split(',').map(str::trim) {
            match part {
                "propose" => st.propose = true,
                "fuse" => st.fuse = true,
                "eval" => st.eval = true,
                other => return Err(Error::Config(format!("unknown stage {other:?}"))),
            }
        }
        if !st.propose {
            return Err(Error::Config("the propose stage is required".into()));
        }
        Ok(st)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub images: usize,
    pub failures: Vec<Failure>,
    pub proposals_total: usize,
    pub max_proposals_per_image: usize,
    /// Share of GT boxes matched by some proposal at IoU 0.5.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposals: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fused: Option<MetricsReport>,
}

/// propose → (fuse) → (eval) over `dataset/images`, `dataset/labels` and
/// the optional `dataset/detections/*.json`. The resolved config is written
/// to `out/config.txt`.
pub fn cmd_run(cfg: &PipelineConfig, dataset: &Path, out: &Path, stages: Stages, debug: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let images_dir = dataset.join("images");
    let labels_dir = dataset.join("labels");
    let dets_dir = dataset.join("detections");
    if !images_dir.is_dir() {
        return Err(Error::io(
            &images_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "missing images directory"),
        ));
    }
    if stages.eval && cfg.eval.format == AnnotationFormat::YoloTxt && !labels_dir.is_dir() {
        return Err(Error::io(
            &labels_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "missing labels directory"),
        ));
    }
    write(&out.join("config.txt"), cfg.to_text())?;

    let images = list_images(&images_dir)?;
    let proposed = cmd_propose(cfg, &images, out, debug)?;
    let mut per_image: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &proposed.detections {
        *per_image.entry(&d.image_id).or_default() += 1;
    }
    let mut summary = RunSummary {
        images: images.len(),
        failures: proposed.failures.clone(),
        proposals_total: proposed.detections.len(),
        max_proposals_per_image: per_image.values().copied().max().unwrap_or(0),
        proposal_recall: None,
        proposals: None,
        fused: None,
    };

    let mut fused = None;
    if stages.fuse && dets_dir.is_dir() {
        let mut dets = Vec::new();
        for f in list_ext(&dets_dir, "json")? {
            dets.extend(load_detections(&f)?);
        }
        let f = fuse_all(cfg, &dets, &proposed.detections)?;
        save_detections(&f, out.join("fused.json"))?;
        fused = Some(f);
    }

    if stages.eval {
        let gts = match cfg.eval.format {
            AnnotationFormat::YoloTxt => load_ground_truth(&labels_dir, Some(&images_dir), cfg.eval.format)?,
            AnnotationFormat::CocoJson => load_ground_truth(&dataset.join("annotations.json"), None, cfg.eval.format)?,
        };
        let report = evaluate_and_write(cfg, &proposed.detections, &gts, out, "metrics_proposals")?;
        summary.proposal_recall = Some(eval::proposal_recall(&proposed.detections, &gts, 0.5));
        summary.proposals = Some(report);
        if let Some(f) = &fused {
            summary.fused = Some(evaluate_and_write(cfg, f, &gts, out, "metrics_fused")?);
        }
    }
    let mut slim = summary.clone();
    for r in [&mut slim.proposals, &mut slim.fused].into_iter().flatten() {
        r.pr_curves.clear();
    }
    write(&out.join("run_summary.json"), to_json(&slim))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BoundingBox;

    #[test]
    fn uniform_frame_has_no_proposals() {
        let img = GrayImage::filled(64, 48, 128).unwrap();
        let r = propose_image("u", &img, &PipelineConfig::default(), true).unwrap();
        assert!(r.proposals.is_empty());
        assert_eq!(r.counts.pyramid_levels, 3);
    }

    #[test]
    fn dark_blocks_are_proposed() {
        let boxes = [BoundingBox::new(10, 10, 16, 12), BoundingBox::new(60, 30, 20, 14)];
        let img = GrayImage::from_fn(128, 96, |x, y| {
            let inside = boxes.iter().any(|b| {
                (x as i64) >= b.x as i64 && (x as i64) < b.right() && (y as i64) >= b.y as i64 && (y as i64) < b.bottom()
            });
            if inside {
                40
            } else {
                220
            }
        })
        .unwrap();
        let r = propose_image("b", &img, &PipelineConfig::default(), false).unwrap();
        for b in &boxes {
            assert!(r.proposals.iter().any(|p| p.bbox.iou(b) >= 0.5), "{b:?} missed: {:?}", r.proposals);
        }
    }

    #[test]
    fn stages_parse() {
        assert_eq!(Stages::parse("all").unwrap(), Stages::default());
        let s = Stages::parse("propose").unwrap();
        assert!(s.propose && !s.fuse && !s.eval);
        assert!(Stages::parse("eval").is_err());
        assert!(Stages::parse("propose,bogus").is_err());
    }
}
