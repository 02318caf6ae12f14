//! End-to-end checks of the command-line binary and its artifacts.

use std::path::Path;
use std::process::Command;

fn kbmatch() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kbmatch"))
}

fn synth_restaurant(dir: &Path) {
    let out = kbmatch()
        .args(["synth", "restaurant", "--out"])
        .arg(dir)
        .output()
        .expect("run synth");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn match_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    synth_restaurant(dir.path());

    let run = |out_dir: &Path| {
        let out = kbmatch()
            .args(["match", "--kb1"])
            .arg(dir.path().join("kb1.tsv"))
            .arg("--kb2")
            .arg(dir.path().join("kb2.tsv"))
            .arg("--truth")
            .arg(dir.path().join("truth.tsv"))
            .arg("--out")
            .arg(out_dir)
            .output()
            .expect("run match");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(out_dir.join("matches.tsv")).unwrap()
    };
    let first = run(&dir.path().join("out1"));
    let second = run(&dir.path().join("out2"));
    assert_eq!(first, second, "same config and inputs must be byte-identical");
    assert!(dir.path().join("out1/report.json").exists());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out1/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["metrics"]["f1"].as_f64().unwrap(), 100.0);
    // One line per match: id1, id2, rule tag.
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 89);
    assert!(text.lines().all(|l| l.split('\t').count() == 3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    synth_restaurant(dir.path());
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        format!(
            "kb1 = {}\nkb2 = {}\ntruth = {}\ntheta = 0.4\nworkers = 2\n",
            dir.path().join("kb1.tsv").display(),
            dir.path().join("kb2.tsv").display(),
            dir.path().join("truth.tsv").display(),
        ),
    )
    .unwrap();
    let out = kbmatch()
        .args(["match", "--config"])
        .arg(&conf)
        .arg("--theta")
        .arg("0.6")
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .expect("run match with config");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["matcher"]["theta"].as_f64().unwrap(), 0.6);
    assert_eq!(report["config"]["workers"].as_u64().unwrap(), 2);
}

#[test]
fn sweep_theta_emits_six_reports() {
    let dir = tempfile::tempdir().unwrap();
    synth_restaurant(dir.path());
    let out = kbmatch()
        .args(["sweep", "--kb1"])
        .arg(dir.path().join("kb1.tsv"))
        .arg("--kb2")
        .arg(dir.path().join("kb2.tsv"))
        .arg("--truth")
        .arg(dir.path().join("truth.tsv"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .expect("run sweep");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let theta_rows = csv.lines().filter(|l| l.starts_with("theta,")).count();
    assert_eq!(theta_rows, 6, "theta varies over six values");
    // One-at-a-time default: 5 + 5 + 5 + 6 rows plus header.
    assert_eq!(csv.lines().count(), 1 + 21);
}

#[test]
fn distinct_diagnostics_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Missing input file.
    let out = kbmatch()
        .args(["match", "--kb1", "/nonexistent/kb1.tsv", "--kb2", "/nonexistent/kb2.tsv"])
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));

    // Invalid parameter range.
    synth_restaurant(dir.path());
    let out = kbmatch()
        .args(["match", "--theta", "1.5", "--kb1"])
        .arg(dir.path().join("kb1.tsv"))
        .arg("--kb2")
        .arg(dir.path().join("kb2.tsv"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));

    // Unparsable config file.
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "no equals sign here\n").unwrap();
    let out = kbmatch()
        .args(["match", "--config"])
        .arg(&conf)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("key = value"));
}

#[test]
fn graph_dump_has_labeled_edges() {
    let dir = tempfile::tempdir().unwrap();
    synth_restaurant(dir.path());
    let out = kbmatch()
        .args(["match", "--dump-graph", "--kb1"])
        .arg(dir.path().join("kb1.tsv"))
        .arg("--kb2")
        .arg(dir.path().join("kb2.tsv"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = std::fs::read_to_string(dir.path().join("out/graph.tsv")).unwrap();
    assert!(!dump.is_empty());
    for line in dump.lines().take(50) {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 5, "src, dst, alpha, beta, gamma");
        let alpha: u8 = fields[2].parse().unwrap();
        let beta: f64 = fields[3].parse().unwrap();
        let gamma: f64 = fields[4].parse().unwrap();
        assert!(alpha == 1 || beta > 0.0 || gamma > 0.0, "trivial edge: {line}");
    }
}
