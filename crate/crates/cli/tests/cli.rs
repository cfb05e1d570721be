use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/shoebox")
}

fn rirfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rirfit"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn config_in(dir: &Path, body: serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body.to_string()).unwrap();
    path
}

fn quick_config(dir: &Path) -> PathBuf {
    config_in(
        dir,
        serde_json::json!({
            "dataset": fixture(),
            "checkpoint": dir.join("out/checkpoint"),
            "listeners": [[2.0, 3.0, 1.5]],
            "render": {"renderLength": 0.25, "maxOrder": 1, "axialOrder": 0},
            "fit": {"epochs": 2, "pinkDuration": 0.3, "randomSeed": 5},
            "grid": {"z": 1.4, "resolution": 1.0},
            "outputDir": "out"
        }),
    )
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_then_render_eval_and_grid_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");

    let o = rirfit(&["fit", "--config", cfg, "--set", "epochs=1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("fit_report.json"));
    assert_eq!(report["perEpochLoss"].as_array().unwrap().len(), 1);
    assert_eq!(report["randomSeed"], 5);
    assert!(out.join("checkpoint/params.json").is_file());

    let o = rirfit(&["render", "--config", cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("rir_000.wav").is_file());

    let o = rirfit(&["eval", "--config", cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("eval.csv")).unwrap();
    let index = json(&fixture().join("index.json"));
    let tests = index["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["split"] == "test")
        .count();
    assert_eq!(csv.lines().count(), 1 + tests);
    assert_eq!(json(&out.join("eval.json"))["testPoints"], tests);

    let o = rirfit(&["grid", "--config", cfg, "--png"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("grid.csv").is_file());
    assert!(out.join("grid.png").is_file());
}

#[test]
fn trace_and_localize_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    assert!(rirfit(&["trace", "--config", cfg]).status.success());
    assert!(json(&out.join("trace.json"))["listeners"][0]["paths"].as_u64().unwrap() > 1);
    assert!(rirfit(&["localize", "--config", cfg]).status.success());
    assert!(json(&out.join("localization.json"))["errorToDatasetSource"].as_f64().unwrap() < 0.05);
}

#[test]
fn render_with_missing_checkpoint_fails_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let o = rirfit(&["render", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoint"));
}

#[test]
fn missing_config_file_names_the_path() {
    let o = rirfit(&["trace", "--config", "/nonexistent/c.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/c.json"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(rirfit(&["bogus"]).status.code(), Some(2));
    assert_eq!(rirfit(&["fit"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let o = rirfit(&["fit", "--config", cfg.to_str().unwrap(), "--set", "noSuchKey=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(rirfit(&["--help"]).status.code(), Some(0));
}
