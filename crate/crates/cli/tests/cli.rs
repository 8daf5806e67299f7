use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rough-mser"));
    c.env_remove("RUST_LOG");
    c
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth(dir: &Path, images: u32) {
    let ds = dir.to_str().unwrap();
    run_ok(&[
        "--set",
        "synth.width=256",
        "--set",
        "synth.height=192",
        "synth",
        "--out",
        ds,
        "--images",
        &images.to_string(),
        "--vehicles",
        "4",
    ]);
}

#[test]
fn synth_then_run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    synth(&ds, 2);
    assert_eq!(fs::read_dir(ds.join("images")).unwrap().count(), 2);
    assert_eq!(fs::read_dir(ds.join("labels")).unwrap().count(), 2);

    let run = tmp.path().join("run");
    let out = run_ok(&["run", ds.to_str().unwrap(), "--out", run.to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("mAP50-95"), "{stdout}");
    for f in ["config.txt", "proposals.json", "summary.json", "metrics_proposals.json", "run_summary.json"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("run_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["images"], 2);
}

#[test]
fn propose_only_stage_skips_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    synth(&ds, 1);
    fs::remove_dir_all(ds.join("labels")).unwrap();
    let run = tmp.path().join("run");
    run_ok(&[
        "run",
        ds.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--stages",
        "propose",
    ]);
    assert!(run.join("proposals.json").is_file());
    assert!(!run.join("metrics_proposals.json").exists());
}

#[test]
fn missing_labels_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    synth(&ds, 1);
    fs::remove_dir_all(ds.join("labels")).unwrap();
    let out = bin()
        .args(["run", ds.to_str().unwrap(), "--out", tmp.path().join("run").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains(ds.join("labels").to_str().unwrap()), "{stderr}");
}

#[test]
fn bad_config_key_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--set", "mser.nonsense=1", "synth", "--out", tmp.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("mser.nonsense"));

    let cfg = tmp.path().join("bad.txt");
    fs::write(&cfg, "mser.delta = -3\n").unwrap();
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "synth", "--out", tmp.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_error_exits_with_two() {
    let out = bin().args(["propose"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fuse_without_proposals_and_unit_damping_passes_through() {
    let tmp = tempfile::tempdir().unwrap();
    let dets = tmp.path().join("dets.json");
    fs::write(
        &dets,
        r#"[
  {"image_id": "a", "bbox": [0, 0, 10, 10], "score": 0.9},
  {"image_id": "a", "bbox": [50, 50, 10, 10], "score": 0.4},
  {"image_id": "b", "bbox": [5, 5, 8, 8], "score": 0.7}
]"#,
    )
    .unwrap();
    let fused = tmp.path().join("fused.json");
    run_ok(&[
        "--set",
        "fusion.damp=1",
        "fuse",
        "--detections",
        dets.to_str().unwrap(),
        "--out",
        fused.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&fused).unwrap()).unwrap();
    let mut got: Vec<(String, f64)> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|d| (d["image_id"].as_str().unwrap().to_string(), d["score"].as_f64().unwrap()))
        .collect();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(got, vec![("a".into(), 0.4), ("a".into(), 0.9), ("b".into(), 0.7)]);
}

#[test]
fn eval_prints_metric_table() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    synth(&ds, 1);
    // ground truth read back as perfect detections
    let labels = fs::read_to_string(ds.join("labels/scene_0000.txt")).unwrap();
    let dets: Vec<String> = labels
        .lines()
        .map(|l| {
            let f: Vec<f64> = l.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect();
            let (w, h) = (f[2] * 256.0, f[3] * 192.0);
            let (x, y) = (f[0] * 256.0 - w / 2.0, f[1] * 192.0 - h / 2.0);
            format!(
                r#"{{"image_id": "scene_0000", "bbox": [{}, {}, {}, {}], "score": 0.9}}"#,
                x.round(),
                y.round(),
                w.round(),
                h.round()
            )
        })
        .collect();
    let det_path = tmp.path().join("dets.json");
    fs::write(&det_path, format!("[{}]", dets.join(","))).unwrap();

    let out = run_ok(&[
        "eval",
        "--detections",
        det_path.to_str().unwrap(),
        "--labels",
        ds.join("labels").to_str().unwrap(),
        "--images",
        ds.join("images").to_str().unwrap(),
        "--out",
        tmp.path().join("ev").to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = stdout.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["Precision", "Recall", "mAP50", "mAP50-95"]);
    let row: Vec<f64> = stdout.lines().nth(1).unwrap().split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[..3], [1.0, 1.0, 1.0]);
    assert!(tmp.path().join("ev/metrics.json").is_file());
}

#[test]
fn mser_dump_is_json() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    synth(&ds, 1);
    let out = run_ok(&["mser", ds.join("images/scene_0000.pgm").to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!v.as_array().unwrap().is_empty());
}
