//! End-to-end tests of the binary: artifact schemas, exit codes, config
//! precedence, and byte-identical determinism across parallelism degrees.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangency"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().expect("header row");
    let ncols = header.split(',').count();
    lines
        .map(|l| {
            let cells: Vec<String> = l.split(',').map(str::to_string).collect();
            assert_eq!(cells.len(), ncols, "ragged row {l:?}");
            cells
        })
        .collect()
}

#[test]
fn portrait_defaults_contain_fifteen_orbits_and_two_fixed_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["portrait", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("o/portrait.csv"));
    let orbit_ks: BTreeSet<&str> = rows
        .iter()
        .filter(|r| r[0] == "orbit")
        .map(|r| r[1].as_str())
        .collect();
    assert_eq!(orbit_ks.len(), 15);
    assert_eq!(rows.iter().filter(|r| r[0] == "fixed_point").count(), 2);
    for entity in ["unstable_manifold", "stable_manifold", "homoclinic"] {
        assert!(rows.iter().any(|r| r[0] == entity), "missing {entity}");
    }
    assert!(dir.path().join("o/plot_portrait.py").exists());
}

#[test]
fn portrait_k_max_three_gives_three_orbit_groups() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["portrait", "--k-max", "3", "--out", "o"]);
    assert!(out.status.success());
    let rows = data_rows(&dir.path().join("o/portrait.csv"));
    let orbit_ks: BTreeSet<&str> = rows
        .iter()
        .filter(|r| r[0] == "orbit")
        .map(|r| r[1].as_str())
        .collect();
    assert_eq!(orbit_ks.len(), 3);
}

#[test]
fn reruns_are_byte_identical_across_parallelism_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (sub, jobs) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let out = run(
            dir.path(),
            &["sweep", "--direction", "1", "--k-max", "16", "--out", sub, "--jobs", jobs],
        );
        assert!(out.status.success());
        outputs.push((
            fs::read(dir.path().join(sub).join("bifurcations.csv")).unwrap(),
            fs::read(dir.path().join(sub).join("fits.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn sweep_headers_echo_the_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "direction = 3\nk_max = 18\nmu2 = 0.0\n").unwrap();
    // The --k-max flag must win over the file value.
    let out = run(
        dir.path(),
        &["sweep", "--config", "cfg.toml", "--k-max", "16", "--out", "o"],
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("o/bifurcations.csv")).unwrap();
    assert!(text.contains("# direction = 3"));
    assert!(text.contains("# k_max = 16"));
    assert!(text.contains("# alpha = 0.8"));
    assert!(text.starts_with("# command = sweep"));
}

#[test]
fn sweep_rate_labels_follow_the_direction() {
    let dir = tempfile::tempdir().unwrap();
    for (direction, rate) in [("2", "alpha^k/k"), ("4", "1/k")] {
        let out = run(
            dir.path(),
            &["sweep", "--direction", direction, "--k-max", "16", "--out", direction],
        );
        assert!(out.status.success());
        let rows = data_rows(&dir.path().join(direction).join("fits.csv"));
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row[5], rate);
        }
    }
}

#[test]
fn sweep_rows_are_sorted_with_seventeen_digit_floats() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["sweep", "--direction", "1", "--k-max", "14", "--out", "o"]);
    assert!(out.status.success());
    let rows = data_rows(&dir.path().join("o/bifurcations.csv"));
    let keys: Vec<(u32, String)> = rows
        .iter()
        .map(|r| (r[2].parse().unwrap(), r[1].clone()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted, "rows sorted by k then kind");
    for row in &rows {
        assert_eq!(row[5], "ok");
        // 16 digits after the point plus the leading digit = 17 significant.
        let mantissa = row[3].split('e').next().unwrap();
        let frac = mantissa.trim_start_matches('-').split('.').nth(1).unwrap();
        assert_eq!(frac.len(), 16, "cell {}", row[3]);
    }
}

#[test]
fn predict_reports_the_known_case1_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["predict", "--direction", "1", "--out", "o"]);
    assert!(out.status.success());
    let rows = data_rows(&dir.path().join("o/predictions.csv"));
    let get = |kind: &str| -> f64 {
        rows.iter()
            .find(|r| r[1] == kind)
            .map(|r| r[2].parse().unwrap())
            .unwrap()
    };
    assert!((get("SN") - 0.5625).abs() < 1e-12);
    assert!((get("PD") + 1.6875).abs() < 1e-12);
    assert_eq!(rows[0][3], "alpha^2k");
}

#[test]
fn verify_defaults_pass_and_cite_the_discriminant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--out", "o"]);
    assert!(
        out.status.success(),
        "stdout: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/verify_report.json")).unwrap())
            .unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    let delta0 = checks
        .iter()
        .find(|c| c["check"] == "discriminant_positive")
        .unwrap();
    assert_eq!(delta0["value"].as_f64().unwrap(), 2.25);
    assert_eq!(report["config"]["alpha"].as_f64().unwrap(), 0.8);
}

#[test]
fn verify_fails_when_resonance_is_broken() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--mu3", "0.1", "--k-max", "14", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let text = fs::read_to_string(dir.path().join("o/verify_report.json")).unwrap();
    assert!(text.contains("\"status\": \"fail\""));
}

#[test]
fn verify_with_small_k_max_reports_insufficient_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify", "--k-max", "6", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let text = fs::read_to_string(dir.path().join("o/verify_report.json")).unwrap();
    assert!(text.contains("insufficient points"));
}

#[test]
fn bad_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["sweep", "--alpha", "1.5"] as &[&str],
        &["sweep", "--direction", "7"],
        &["sweep", "--k-max", "40"],
        &["sweep", "--v", "0,0,0,0"],
        &["predict", "--config", "missing.toml"],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "not_a_key = true\n").unwrap();
    let out = run(dir.path(), &["predict", "--config", "cfg.toml"]);
    assert_eq!(out.status.code(), Some(2), "unknown config key");
}

#[test]
fn large_k_cap_can_be_overridden_explicitly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["predict", "--k-max", "40", "--allow-large-k", "--out", "o"],
    );
    assert!(out.status.success());
}

#[test]
fn solver_failure_exits_with_code_three() {
    // Far beyond every saddle-node distance no single-round orbit survives.
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["portrait", "--mu1", "0.5", "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
}
