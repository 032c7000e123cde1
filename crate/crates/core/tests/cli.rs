//! The `stemhull` binary: subcommands, outputs and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stemhull::metrics::{InventorySummary, Method, REPORT_HEADER};

const SINGLE_TRUNK: &str = r#"
seed = 4

[terrain]
extent = { min_x = 0.0, min_y = 0.0, max_x = 4.0, max_y = 4.0 }
amplitude = 0.1
density = 800.0

[[trunk]]
x = 2.0
y = 2.0
base_diameter = 0.3
noise_sigma = 0.003
"#;

fn stemhull(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stemhull")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Generates the single-trunk scene into `dir`.
fn synth_single(dir: &Path) -> (PathBuf, PathBuf) {
    let cfg = write(dir, "scene.toml", SINGLE_TRUNK);
    let out = stemhull(&["synth", "--config", s(&cfg), "--out-dir", s(dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    (dir.join("scene.ply"), dir.join("truth.csv"))
}

fn read_summary(path: &Path) -> InventorySummary {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn inventory_of_single_trunk_scene() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, truth) = synth_single(dir.path());
    let out_dir = dir.path().join("out");
    let out = stemhull(&["inventory", "--input", s(&cloud), "--reference", s(&truth), "--out-dir", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER.join(","));
    assert_eq!(lines.len(), 2, "{report}");
    let summary = read_summary(&out_dir.join("summary.json"));
    assert_eq!((summary.trees_estimated, summary.matched), (1, 1));
    let err = summary.metrics[&Method::Final].bias.unwrap();
    // the hull rides the outermost noise, roughly 2.5σ on each side
    assert!(err.abs() < 2.0, "final error {err} cm");
}

#[test]
fn inventory_is_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, truth) = synth_single(dir.path());
    let mut reports = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out_dir = dir.path().join(name);
        let out = stemhull(&[
            "inventory", "--input", s(&cloud), "--reference", s(&truth), "--out-dir", s(&out_dir), "--seed", "9", "--threads", threads,
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        reports.push(std::fs::read(out_dir.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn debug_dumps_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _) = synth_single(dir.path());
    let out_dir = dir.path().join("out");
    let out = stemhull(&["inventory", "--input", s(&cloud), "--out-dir", s(&out_dir), "--debug-dumps"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["ground.asc", "tree_0000_section.csv", "tree_0000_hull.csv"] {
        assert!(out_dir.join("debug").join(f).is_file(), "{f} missing");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, _) = synth_single(dir.path());
    let cfg = write(
        dir.path(),
        "pipeline.toml",
        &format!("input = {:?}\nout_dir = {:?}\nmin_dbh_cm = 50.0\n", s(&cloud), s(&dir.path().join("cfg_out"))),
    );
    // the config's minimum drops the 30 cm stem, the flag restores it
    let out = stemhull(&["inventory", "--config", s(&cfg)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read_summary(&dir.path().join("cfg_out/summary.json")).trees_estimated, 0);
    let out = stemhull(&["inventory", "--config", s(&cfg), "--min-dbh-cm", "8"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = read_summary(&dir.path().join("cfg_out/summary.json"));
    assert_eq!(summary.trees_estimated, 1);
    assert!(summary.warnings.is_empty());
}

#[test]
fn empty_cloud_reports_no_extent() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = write(dir.path(), "empty.xyz", "# nothing here\n");
    let out = stemhull(&["inventory", "--input", s(&cloud), "--out-dir", s(&dir.path().join("out"))]);
    assert_ne!(code(&out), 0);
    assert!(stderr(&out).contains("no extent"), "{}", stderr(&out));
    assert!(!dir.path().join("out/report.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    // usage
    assert_eq!(code(&stemhull(&[])), 1);
    assert_eq!(code(&stemhull(&["inventory", "--bogus"])), 1);
    assert_eq!(code(&stemhull(&["--help"])), 0);
    assert_eq!(code(&stemhull(&["--version"])), 0);
    // configuration
    let cloud = write(dir.path(), "c.xyz", "0 0 0\n1 0 0\n0 1 0\n");
    let out = stemhull(&["inventory", "--input", s(&cloud), "--out-dir", s(&out_dir), "--eps-cm", "5"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("denoise_eps"), "{}", stderr(&out));
    assert!(!out_dir.exists(), "no outputs on invalid config");
    let bad = write(dir.path(), "bad.toml", "segment = { k = 1 }\n");
    assert_eq!(code(&stemhull(&["inventory", "--config", s(&bad), "--input", s(&cloud), "--out-dir", s(&out_dir)])), 1);
    let unknown = write(dir.path(), "unknown.toml", "no_such_key = 3\n");
    assert_eq!(code(&stemhull(&["inventory", "--config", s(&unknown)])), 1);
    assert_eq!(code(&stemhull(&["inventory", "--out-dir", s(&out_dir)])), 1);
    // I/O and parsing
    let missing = dir.path().join("absent.ply");
    assert_eq!(code(&stemhull(&["inventory", "--input", s(&missing), "--out-dir", s(&out_dir)])), 2);
    let garbage = write(dir.path(), "garbage.ply", "ply\nformat martian 9.0\nend_header\n");
    assert_eq!(code(&stemhull(&["inventory", "--input", s(&garbage), "--out-dir", s(&out_dir)])), 2);
}

fn report_table(rows: &[(usize, f64, f64, f64)]) -> String {
    let mut t = REPORT_HEADER.join(",") + "\n";
    for &(id, x, y, d) in rows {
        t += &format!("{id},{x},{y},{d},{},,{d},hull,,,\n", d - 1.5);
    }
    t
}

const REFERENCE: &str = "tree_id,east_m,north_m,dbh_cm\nA,1.0,1.0,20.0\nB,5.0,1.0,35.5\nC,3.0,6.0,12.25\n";

#[test]
fn evaluate_identical_inputs_gives_zero_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let est = write(dir.path(), "est.csv", &report_table(&[(0, 1.0, 1.0, 20.0), (1, 5.0, 1.0, 35.5), (2, 3.0, 6.0, 12.25)]));
    let refs = write(dir.path(), "ref.csv", REFERENCE);
    let out = stemhull(&["evaluate", "--input", s(&est), "--reference", s(&refs), "--out-dir", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rmse_cm"), "{stdout}");
    let m = read_summary(&dir.path().join("summary.json")).metrics[&Method::Final];
    assert_eq!((m.n, m.bias, m.rmse, m.std), (3, Some(0.0), Some(0.0), Some(0.0)));
    let cyl = read_summary(&dir.path().join("summary.json")).metrics[&Method::Cylinder];
    assert_eq!(cyl.bias, Some(-1.5));
}

#[test]
fn evaluate_single_offset_pair() {
    let dir = tempfile::tempdir().unwrap();
    let est = write(dir.path(), "est.csv", &report_table(&[(0, 1.1, 0.9, 21.0)]));
    let refs = write(dir.path(), "ref.csv", "tree_id,east_m,north_m,dbh_cm\nA,1.0,1.0,20.0\n");
    let out = stemhull(&["evaluate", "--input", s(&est), "--reference", s(&refs), "--out-dir", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = read_summary(&dir.path().join("summary.json")).metrics[&Method::Final];
    assert_eq!(m.n, 1);
    assert!((m.bias.unwrap() - 1.0).abs() < 1e-12 && (m.rmse.unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(m.std, None);
}

#[test]
fn evaluate_rejects_malformed_tables() {
    let dir = tempfile::tempdir().unwrap();
    let refs = write(dir.path(), "ref.csv", REFERENCE);
    let no_column = write(dir.path(), "est.csv", "tree_id,x_m,y_m,dbh_hull_cm\n0,1,1,20\n");
    let out = stemhull(&["evaluate", "--input", s(&no_column), "--reference", s(&refs)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dbh_cyl_cm"), "{}", stderr(&out));
    let bad_number = write(dir.path(), "est2.csv", &report_table(&[(0, 1.0, 1.0, 20.0)]).replace("20,", "twenty,"));
    let out = stemhull(&["evaluate", "--input", s(&bad_number), "--reference", s(&refs)]);
    assert_ne!(code(&out), 0);
    let bad_ref = write(dir.path(), "ref2.csv", "id,x,y\nA,1,1\n");
    let good = write(dir.path(), "est3.csv", &report_table(&[(0, 1.0, 1.0, 20.0)]));
    assert_ne!(code(&stemhull(&["evaluate", "--input", s(&good), "--reference", s(&bad_ref)])), 0);
    assert_eq!(code(&stemhull(&["evaluate", "--input", s(&good), "--reference", s(&refs), "--max-dist", "-1"])), 1);
}

fn ten_trunk_scene() -> String {
    let mut t = String::from("seed = 12\n[terrain]\namplitude = 0.3\ndensity = 200.0\n");
    for i in 0..10 {
        t += &format!(
            "[[trunk]]\nx = {}\ny = {}\nbase_diameter = {}\ndensity = 500.0\nfurrow_amplitude = 0.005\nfurrow_count = 12\n",
            2.0 + 4.0 * (i % 5) as f64,
            5.0 + 10.0 * (i / 5) as f64,
            0.1 + 0.05 * i as f64
        );
    }
    t
}

#[test]
fn synth_writes_scene_and_truth_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scene.toml", &ten_trunk_scene());
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = stemhull(&["synth", "--config", s(&cfg), "--out-dir", s(&out_dir)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let mut files: Vec<_> = std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        assert_eq!(files, ["scene.ply", "truth.csv"]);
        outputs.push((std::fs::read(out_dir.join("scene.ply")).unwrap(), std::fs::read(out_dir.join("truth.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let truth = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert_eq!(truth.lines().count(), 11);
    // a different seed changes the cloud but not the truth table
    let out_dir = dir.path().join("c");
    assert_eq!(code(&stemhull(&["synth", "--config", s(&cfg), "--out-dir", s(&out_dir), "--seed", "13"])), 0);
    assert_ne!(std::fs::read(out_dir.join("scene.ply")).unwrap(), outputs[0].0);
    assert_eq!(std::fs::read(out_dir.join("truth.csv")).unwrap(), outputs[0].1);
}

#[test]
fn synth_rejects_interpenetrating_trunks() {
    let dir = tempfile::tempdir().unwrap();
    let overlap = "[[trunk]]\nx = 5.0\ny = 5.0\nbase_diameter = 0.4\n[[trunk]]\nx = 5.2\ny = 5.0\nbase_diameter = 0.4\n";
    let cfg = write(dir.path(), "scene.toml", overlap);
    let out = stemhull(&["synth", "--config", s(&cfg), "--out-dir", s(&dir.path().join("out"))]);
    assert_ne!(code(&out), 0);
    assert!(stderr(&out).contains("interpenetrate"), "{}", stderr(&out));
    assert!(!dir.path().join("out/scene.ply").exists());
    // allowed when flagged as one fused stem pair
    let cfg = write(dir.path(), "fused.toml", &overlap.replace("base_diameter = 0.4\n[[", "base_diameter = 0.4\nconjoined = true\n[["));
    assert_eq!(code(&stemhull(&["synth", "--config", s(&cfg), "--out-dir", s(&dir.path().join("fused"))])), 0);
}
