use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fmv-sense");

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_run_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("meeting.jsonl");
    let out = cli(&["simulate", "--scenario", s(&scenario("meeting_basic")), "--out", s(&stream)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let truth = dir.path().join("meeting.truth.jsonl");
    assert!(truth.exists(), "truth written next to the stream");

    let events = dir.path().join("events.jsonl");
    let cop = dir.path().join("cop.geojson");
    let out = cli(&["run", "--stream", s(&stream), "--events-out", s(&events), "--cop-out", s(&cop)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(stats["frames_processed"], 300);

    let fc: Value = serde_json::from_str(&std::fs::read_to_string(&cop).unwrap()).unwrap();
    assert_eq!(fc["type"], "FeatureCollection");
    assert_eq!(fc["features"][0]["properties"]["type"], "meeting");

    let out = cli(&["evaluate", "--pred", s(&events), "--truth", s(&truth), "--tol", "7"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["overall"]["precision"], 1.0);
    assert_eq!(report["overall"]["recall"], 1.0);
    assert_eq!(report["per_type"]["meeting"]["true_positives"], 1);
}

#[test]
fn explicit_truth_path_and_seed_without_noise_file() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("a.jsonl");
    let truth = dir.path().join("gt.jsonl");
    let out = cli(&[
        "simulate", "--scenario", s(&scenario("crowd_basic")), "--out", s(&stream), "--truth-out", s(&truth), "--seed", "3",
    ]);
    assert!(out.status.success());
    let gt = std::fs::read_to_string(&truth).unwrap();
    assert_eq!(gt.lines().count(), 1);
    assert!(gt.contains("\"crowd\""));
}

#[test]
fn plan_prints_tiles() {
    let out = cli(&["plan", "--width", "3840", "--height", "2160", "--label", "medium_altitude"]);
    assert!(out.status.success());
    let plans: Value = serde_json::from_slice(&out.stdout).unwrap();
    let tiles = plans["medium_altitude"]["tiles"].as_array().unwrap();
    // offsets {0, 1024, 2048, 2560} x {0, 880}
    assert_eq!(tiles.len(), 8);
    let xs: Vec<f64> = tiles.iter().take(4).map(|t| t["origin_x"].as_f64().unwrap()).collect();
    assert_eq!(xs, vec![0.0, 1024.0, 2048.0, 2560.0]);
    assert_eq!(tiles[4]["origin_y"], 880.0);

    let out = cli(&["plan", "--width", "640", "--height", "480"]);
    let plans: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(plans.as_object().unwrap().len(), 4, "one plan per actionable label");
    // low altitude runs two scales, each one tile
    assert_eq!(plans["low_altitude"]["tiles"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let events = dir.path().join("e.jsonl");
    let cop = dir.path().join("c.geojson");
    let out = cli(&["run", "--stream", s(&missing), "--events-out", s(&events), "--cop-out", s(&cop)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!events.exists());

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"frame_id\":0,\"timestamp_ms\":0,\"width\":10,\"height\":10,\"detections\":[{\"class\":\"person\",\"bbox\":{\"x\":1,\"y\":1,\"w\":2,\"h\":2},\"confidence\":2.0}]}\n").unwrap();
    let out = cli(&["run", "--stream", s(&bad), "--events-out", s(&events), "--cop-out", s(&cop)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1") && err.contains("confidence"), "{err}");

    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[tracker]\niou_threshold = 3.0\n").unwrap();
    let out = cli(&["plan", "--width", "10", "--height", "10", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));

    let sc = dir.path().join("sc.toml");
    std::fs::write(
        &sc,
        "frame_count = 10\nframe_w = 100\nframe_h = 100\nfps = 0.0\n[[activities]]\ntype = \"meeting\"\nparticipants = [\"x\"]\ntrigger_frame = 50\n",
    )
    .unwrap();
    let out = cli(&["simulate", "--scenario", s(&sc), "--out", s(&dir.path().join("o.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fps") && err.contains("trigger_frame") && err.contains("unknown participant"), "{err}");
}

#[test]
fn print_config_echoes_toml() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("empty.jsonl");
    std::fs::write(&stream, "").unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[events]\ncrowd_min_count = 7\n").unwrap();
    let out = cli(&[
        "run", "--stream", s(&stream), "--config", s(&cfg), "--events-out", s(&dir.path().join("e")), "--cop-out",
        s(&dir.path().join("c")), "--print-config",
    ]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("crowd_min_count = 7"), "{err}");
    assert_eq!(std::fs::read_to_string(dir.path().join("e")).unwrap(), "");
}
