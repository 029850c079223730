use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use multiswarm::harness::{generate_scenario, ScenarioConfig};
use multiswarm::metrics;
use multiswarm::World;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multiswarm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["trial", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["trial", "--per-group", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--per-group"), "{}", stderr(&o));

    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));

    let o = run(&["trial", "--warp-speed"]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["grid-search", "--axis-step", "0.3"]).status.code(), Some(1));
    assert_eq!(run(&["trial", "--controller", "[2,0,0,0,0,0]"]).status.code(), Some(1));
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"scenario": {"grops": 3}}"#).unwrap();
    let o = run(&["--config", path_arg(&cfg), "trial"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_world_is_a_runtime_failure() {
    let o = run(&["oracle", "/nonexistent/world.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trial_writes_metrics_manifest_and_snapshot_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trial");
    let o = run(&[
        "--out-dir",
        path_arg(&out),
        "--seed",
        "7",
        "trial",
        "--groups",
        "2",
        "--per-group",
        "2",
        "--bollards",
        "--duration",
        "2400",
        "--sample-every",
        "100",
        "--snapshots",
        "0,300,600,900,1200,2400",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svgs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "svg"))
        .collect();
    assert_eq!(svgs.len(), 6);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    // header plus ticks 100, 200, ..., 24000
    assert_eq!(metrics.lines().count(), 241);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "trial");
    assert_eq!(manifest["seeds"], serde_json::json!([7]));
    assert_eq!(manifest["config"]["scenario"]["n_per_group"], 2);
    assert!(manifest["artifacts"].as_array().unwrap().iter().any(|a| a == "metrics.csv"));
    assert!(manifest["started_at"].as_str().unwrap().ends_with('Z'));
    assert_eq!(
        fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().file_name() == "manifest.json").count(),
        1
    );
}

#[test]
fn manifest_reproduces_trial() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&["--out-dir", path_arg(&a), "--seed", "3", "trial", "--groups", "2", "--per-group", "4", "--duration", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = a.join("manifest.json");
    let o = run(&["--out-dir", path_arg(&b), "--config", path_arg(&manifest), "trial"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["metrics.csv", "summary.json", "final_world.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"scenario": {"g": 4, "n_per_group": 3, "duration_s": 5.0, "seed": 11}}"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&["--out-dir", path_arg(&out), "--config", path_arg(&cfg), "--seed", "12", "trial", "--groups", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["scenario"]["g"], 1);
    assert_eq!(manifest["config"]["scenario"]["n_per_group"], 3);
    assert_eq!(manifest["config"]["scenario"]["seed"], 12);
    assert_eq!(fs::read_to_string(out.join("metrics.csv")).unwrap().lines().next().unwrap(), "tick,time_s,d_cm,u,pc,lc_1");
}

#[test]
fn coarse_grid_search_has_25_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid");
    let o = run(&[
        "--out-dir",
        path_arg(&out),
        "grid-search",
        "--axis-step",
        "0.5",
        "--runs",
        "5",
        "--groups",
        "2",
        "--per-group",
        "2",
        "--duration",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let heatmap = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert_eq!(heatmap.lines().next().unwrap(), "vl2,vr2,mean_cost,ln_mean_cost,n_runs");
    assert_eq!(heatmap.lines().count(), 26);
    assert!(heatmap.lines().skip(1).all(|l| l.ends_with(",5")));
    assert_eq!(fs::read_to_string(out.join("runs.csv")).unwrap().lines().count(), 126);
    assert!(out.join("best.json").exists());
}

#[test]
fn render_and_oracle_on_saved_world() {
    let dir = tempfile::tempdir().unwrap();
    let world = generate_scenario(&ScenarioConfig { g: 5, n_per_group: 30, ..ScenarioConfig::default() }).unwrap();
    let input = dir.path().join("w.json");
    fs::write(&input, world.to_json()).unwrap();
    let out = dir.path().join("svg");
    let o = run(&["--out-dir", path_arg(&out), "render", path_arg(&input)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(out.join("w.svg")).unwrap();
    assert_eq!(svg.lines().filter(|l| l.starts_with("<circle")).count(), 155);
    assert!(out.join("manifest.json").exists());

    let again = dir.path().join("again.svg");
    let o = run(&["render", path_arg(&input), "--output", path_arg(&again)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&again).unwrap(), svg.as_bytes());

    let o = run(&["oracle", path_arg(&input)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["ok"], true);
    let parsed = World::from_json(&world.to_json()).unwrap();
    assert_eq!(doc["pc"]["fast"], metrics::sample(&parsed).unwrap().pc);
}

#[test]
fn validate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = run(&[
        "--out-dir",
        path_arg(&out),
        "validate",
        "--trials",
        "1",
        "--groups",
        "1,2",
        "--per-group",
        "2",
        "--duration",
        "20",
        "--checkpoints",
        "10,20",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fs::read_to_string(out.join("validation.csv")).unwrap();
    // 2 groups × 1 size × 2 bollard settings × 1 trial × 2 checkpoints
    assert_eq!(rows.lines().count(), 9);
    assert!(out.join("validation_summary.csv").exists());
    assert_eq!(fs::read_to_string(out.join("time_to_steady.csv")).unwrap().lines().count(), 5);
}
