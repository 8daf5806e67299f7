use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rough_mser::config::PipelineConfig;
use rough_mser::eval::{AnnotationFormat, OperatingPoint};
use rough_mser::imaging::{build_pyramid_with, load_image, save_pgm};
use rough_mser::mrmser::detect_mr_mser;
use rough_mser::mser::{detect_mser, ExtremalRegion, RegionRecord};
use rough_mser::pipeline::{self, Stages};

/// Default root for timestamped run directories.
const OUT_ROOT_ENV: &str = "ROUGH_MSER_OUT";

#[derive(Parser)]
#[command(name = "rough-mser", version, about = "Multiresolution MSER vehicle proposals with rough-entropy filtering")]
struct Cli {
    /// Config file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-image parallelism (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `fixed:<score>` or `best-f1`.
    #[arg(long, global = true)]
    operating_point: Option<String>,
    /// Override any config key, e.g. `--set mser.delta=3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Log per-image stage timings and counts.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset (images/ and labels/).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        images: Option<u32>,
        #[arg(long)]
        vehicles: Option<u32>,
    },
    /// Write every pyramid level of an image as PGM.
    Pyramid {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump MSER regions of an image as JSON.
    Mser {
        image: PathBuf,
        /// Run across the pyramid and merge at base resolution.
        #[arg(long)]
        multires: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate proposals for images or directories of images.
    Propose {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write confidence maps, masks, region dumps and RE curves.
        #[arg(long)]
        debug: bool,
    },
    /// Rescore external detections by agreement with proposals.
    Fuse {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        proposals: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score detections against annotations.
    Eval {
        #[arg(long)]
        detections: PathBuf,
        /// Directory of YOLO txt files or a COCO json file.
        #[arg(long)]
        labels: PathBuf,
        /// Images, needed for YOLO dimensions.
        #[arg(long)]
        images: Option<PathBuf>,
        /// `yolo-txt` or `coco-json`.
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline over a dataset directory.
    Run {
        dataset: PathBuf,
        /// Output directory (default: timestamped under $ROUGH_MSER_OUT or ./runs).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of propose,fuse,eval.
        #[arg(long, default_value = "all")]
        stages: String,
        #[arg(long)]
        debug: bool,
    },
}

/// Marks errors that should exit with the usage/config status.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: impl Into<anyhow::Error>) -> anyhow::Error {
    ConfigError(e.into()).into()
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(config_err)?,
        None => PipelineConfig::default(),
    };
    for kv in &cli.overrides {
        cfg.apply_override(kv).map_err(config_err)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string()).map_err(config_err)?;
    }
    if let Some(op) = &cli.operating_point {
        cfg.eval.operating_point = OperatingPoint::parse(op).map_err(config_err)?;
    }
    match &cli.command {
        Command::Synth { images, vehicles, .. } => {
            if let Some(n) = images {
                cfg.synth.images = *n;
            }
            if let Some(n) = vehicles {
                cfg.synth.vehicles = *n;
            }
        }
        Command::Eval { format: Some(f), .. } => {
            cfg.eval.format = AnnotationFormat::parse(f).map_err(config_err)?;
        }
        _ => {}
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(pipeline::list_images(p)?);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn write_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn default_run_dir() -> PathBuf {
    let root = std::env::var_os(OUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(chrono::Local::now().format("run-%Y%m%d-%H%M%S").to_string())
}

/// Returns whether any per-item failure occurred.
fn run(cli: Cli) -> Result<bool> {
    let cfg = resolve_config(&cli)?;
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Synth { out, .. } => {
            let gts = pipeline::cmd_synth(&cfg, &out)?;
            fs::write(out.join("config.txt"), cfg.to_text())?;
            println!("wrote {} scenes to {}", gts.len(), out.display());
        }
        Command::Pyramid { image, out } => {
            let img = load_image(&image)?;
            let pyr = build_pyramid_with(&img, cfg.pyramid_levels, cfg.downsample);
            fs::create_dir_all(&out)?;
            for (k, level) in pyr.levels.iter().enumerate() {
                save_pgm(level, out.join(format!("level_{k}.pgm")))?;
                println!("level {k}: {}x{}", level.width(), level.height());
            }
        }
        Command::Mser { image, multires, out } => {
            let img = load_image(&image)?;
            let regions = if multires {
                let pyr = build_pyramid_with(&img, cfg.pyramid_levels, cfg.downsample);
                detect_mr_mser(&pyr, &cfg.mrmser)
            } else {
                detect_mser(&img, &cfg.mrmser.mser)
            };
            let records: Vec<RegionRecord> = regions.iter().map(ExtremalRegion::record).collect();
            write_json(&records, out.as_deref())?;
        }
        Command::Propose { inputs, out, debug } => {
            let images = expand_inputs(&inputs)?;
            let outcome = pipeline::cmd_propose(&cfg, &images, &out, debug)?;
            println!(
                "{} images, {} proposals -> {}",
                outcome.images.len(),
                outcome.detections.len(),
                out.join("proposals.json").display()
            );
            return Ok(!outcome.failures.is_empty());
        }
        Command::Fuse {
            detections,
            proposals,
            out,
        } => {
            let fused = pipeline::cmd_fuse(&cfg, &detections, proposals.as_deref(), &out)?;
            println!("{} detections -> {}", fused.len(), out.display());
        }
        Command::Eval {
            detections,
            labels,
            images,
            out,
            ..
        } => {
            let report = pipeline::cmd_eval(&cfg, &detections, &labels, images.as_deref(), &out)?;
            print!("{}", report.table());
        }
        Command::Run {
            dataset,
            out,
            stages,
            debug,
        } => {
            let stages = Stages::parse(&stages).map_err(config_err)?;
            let out = out.unwrap_or_else(default_run_dir);
            let summary = pipeline::cmd_run(&cfg, &dataset, &out, stages, debug)?;
            println!(
                "{} images, {} proposals (max {} per image)",
                summary.images, summary.proposals_total, summary.max_proposals_per_image
            );
            if let Some(r) = summary.proposal_recall {
                println!("proposal recall @0.5: {r:.4}");
            }
            for (name, report) in [("proposals", &summary.proposals), ("fused", &summary.fused)] {
                if let Some(report) = report {
                    println!("{name}:");
                    print!("{}", report.table());
                }
            }
            println!("artifacts in {}", out.display());
            return Ok(!summary.failures.is_empty());
        }
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: some items failed, see log");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<ConfigError>().is_some()
                || e.downcast_ref::<rough_mser::Error>().is_some_and(|e| e.is_config());
            if config {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
