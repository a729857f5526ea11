use std::path::Path;
use std::process::{Command, Output};

use hitchsim_cli::dataset;
use hitchsim_core::fit::{Geometry, HitchDataset, HitchRow};
use proptest::prelude::*;

fn hitchsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitchsim"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `key = value` line of a report.
fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn phasematch_reports() {
    let o = hitchsim(&["phasematch", "--preset", "fig1"]);
    assert!(o.status.success());
    let theta = value(&stdout(&o), "phase_matched_angle_rad");
    assert!((theta - 2.986e-3).abs() < 1e-6, "{theta}");

    let o = hitchsim(&["phasematch", "--angle", "5e-3", "--a2", "0"]);
    let a1 = value(&stdout(&o), "a1_re");
    assert!((a1 - 1.5708e-4).abs() < 1e-8);

    let o = hitchsim(&["phasematch", "--preset", "free"]);
    assert_eq!(value(&stdout(&o), "phase_matched_angle_rad"), 0.0);
}

#[test]
fn invalid_medium_is_a_parameter_error() {
    let o = hitchsim(&["phasematch", "--set", "medium.a1_re=-1e-3"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = hitchsim(&["phasematch", "--set", "medium.b=-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(hitchsim(&[]).status.code(), Some(1));
    assert_eq!(hitchsim(&["bogus"]).status.code(), Some(1));
    assert_eq!(hitchsim(&["propagate", "--preset", "fig9"]).status.code(), Some(1));
    let o = hitchsim(&["sweep", "--set", "scan.b_values=[]", "--set", "scan.gain_values=[]"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least one value"));
    assert_eq!(hitchsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_documents_defaults() {
    let o = hitchsim(&["propagate", "--help"]);
    let text = stdout(&o);
    for key in ["[grid]", "n = 4096", "[medium]", "b = 0.0001", "[fit]", "max_evals = 500", "fig2-loss"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[seed]\nsigma = 80.0\nwaist = 3.0\n").unwrap();
    let o = hitchsim(&["propagate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("waist") && stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn config_file_layers_over_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[scan]\nnz = 9\n").unwrap();
    let o = hitchsim(&["config", "--preset", "experiment", "--config", path.to_str().unwrap(), "--set", "medium.b=2e-5"]);
    let cfg: hitchsim_cli::RunConfig = toml::from_str(&stdout(&o)).unwrap();
    assert_eq!(cfg.scan.nz, 9);
    assert_eq!(cfg.medium.b, 2e-5);
    assert_eq!(cfg.seed.tilt, 5e-3);
}

#[test]
fn guard_failure_exits_3_with_z() {
    // a seed this wide touches the window edges
    let dir = tempfile::tempdir().unwrap();
    let o = hitchsim(&["propagate", "--set", "seed.sigma=600", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("at z = 0"), "{}", stderr(&o));
    assert!(!dir.path().join("diagnostics.csv").exists());
}

#[test]
fn fig1_propagate_writes_maps_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = hitchsim(&["propagate", "--preset", "fig1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["mode1.pgm", "mode2.pgm", "mode1_norm.pgm", "mode2_norm.pgm"] {
        let bytes = std::fs::read(dir.path().join(name)).unwrap();
        let header = b"P5\n4096 200\n65535\n";
        assert!(bytes.starts_with(header));
        assert_eq!(bytes.len(), header.len() + 2 * 4096 * 200);
    }
    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "z,com1,com2,peak1,peak2,power1,power2,gain,separation,free_line"
    );
    assert_eq!(lines.count(), 200);
    assert!(csv.ends_with('\n'));
    assert!(csv.contains("# [medium]\n") && !csv.contains("[output]"));
    let summary = json(&dir.path().join("summary.json"));
    let gain = summary["net_gain"].as_f64().unwrap();
    assert!((gain - hitchsim_core::presets::FIG1_NET_GAIN).abs() < 1e-6);
}

#[test]
fn free_preset_has_empty_idler_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = hitchsim(&["propagate", "--preset", "free", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = stdout(&o);
    assert!((value(&report, "exit_com1") - 150.0).abs() < 1e-9);
    let map = std::fs::read(dir.path().join("mode2.pgm")).unwrap();
    let body = &map[b"P5\n4096 200\n65535\n".len()..];
    assert!(body.iter().all(|&b| b == 0xff), "idler map must be white");
    let summary = json(&dir.path().join("summary.json"));
    assert!(summary["mode2"].is_null());
}

#[test]
fn experiment_preset_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = hitchsim(&["propagate", "--preset", "experiment", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = json(&dir.path().join("summary.json"));
    assert!((summary["length"].as_f64().unwrap() - 25157.2).abs() < 0.1);
}

#[test]
fn fig8_sweep_writes_one_curve_per_loss() {
    let dir = tempfile::tempdir().unwrap();
    let o = hitchsim(&["sweep", "--preset", "fig8", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "exit_curve_ima1_0e0.csv",
            "exit_curve_ima1_1.3e-5.csv",
            "exit_curve_ima1_1.7e-5.csv",
            "exit_curve_ima1_2.3e-5.csv"
        ]
    );
    let csv = std::fs::read_to_string(dir.path().join("exit_curve_ima1_2.3e-5.csv")).unwrap();
    let mut lines = csv.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "b,net_gain,exit_com1,exit_com2,hitch_distance,status");
    assert!(lines.all(|l| l.ends_with(",ok")));
}

#[test]
fn sweep_records_point_failures() {
    let dir = tempfile::tempdir().unwrap();
    // a gain of 1e40 cannot be reached below bL = 20
    let o = hitchsim(&["sweep", "--gains", "5,1e40", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("exit_curve.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows[0].ends_with(",ok"));
    assert!(rows[1].contains("error: gain not attainable"), "{}", rows[1]);
    assert_eq!(rows[1].split(',').count(), 6);

    let o = hitchsim(&["sweep", "--gains", "1e40", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

fn synth(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let mut args = vec!["synth", "--preset", "experiment", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = hitchsim(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("dataset.csv")
}

#[test]
fn fit_recovers_seed_42_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        &["--rows", "40", "--im-a1", "1.7e-5", "--offset1", "12", "--offset2", "-7", "--noise", "0.444", "--noise-seed", "42"],
    );
    let o = hitchsim(&["fit", data.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&dir.path().join("fit_result.json"));
    let im = r["im_a1"].as_f64().unwrap();
    assert!((im - 1.7e-5).abs() / 1.7e-5 < 0.15, "{im}");
    assert!((r["offset1"].as_f64().unwrap() - 12.0).abs() < 0.5);
    assert!((r["offset2"].as_f64().unwrap() + 7.0).abs() < 0.5);
    assert_eq!(r["converged"], true);
    assert_eq!(r["dof"], 77);
    let residuals = std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert_eq!(residuals.lines().filter(|l| !l.starts_with('#')).count(), 41);
}

#[test]
fn fit_without_im_a1_on_lossless_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--rows", "8", "--offset1", "3.5", "--offset2", "-1.25"]);
    let o = hitchsim(&["fit", data.to_str().unwrap(), "--no-im-a1", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("im_a1 = 0.0 (fixed)"));
    let r = json(&dir.path().join("fit_result.json"));
    assert_eq!(r["im_a1_fitted"], false);
    assert!((r["offset1"].as_f64().unwrap() - 3.5).abs() < 1e-9);
    assert!((r["offset2"].as_f64().unwrap() + 1.25).abs() < 1e-9);
    assert!(r["chi2"].as_f64().unwrap() < 1e-12);
}

#[test]
fn fit_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--rows", "3"]);
    let o = hitchsim(&["fit", data.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("insufficient rows"), "{}", stderr(&o));

    let text = std::fs::read_to_string(&data).unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, text.replacen("1.5,", "1.5,x", 1)).unwrap();
    let o = hitchsim(&["fit", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.csv:6:"), "{}", stderr(&o));

    let o = hitchsim(&["fit", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--noise", "0.5", "--noise-seed", "42", "--rows", "5"];
    let fa = std::fs::read(synth(a.path(), &args)).unwrap();
    let fb = std::fs::read(synth(b.path(), &args)).unwrap();
    assert_eq!(fa, fb);
    let other = std::fs::read(synth(b.path(), &["--noise", "0.5", "--noise-seed", "43", "--rows", "5"])).unwrap();
    assert_ne!(fa, other);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

fn positive() -> impl Strategy<Value = f64> {
    prop_oneof![1e-12..1e6f64, any::<f64>().prop_filter("positive", |x| x.is_finite() && *x > 0.0)]
}

proptest! {
    #[test]
    fn dataset_csv_round_trips(
        rows in prop::collection::vec((positive(), finite(), finite(), positive(), positive()), 0..12),
        angle in finite(),
        length in positive(),
    ) {
        let data = HitchDataset {
            geometry: Geometry { angle, length, k: std::f64::consts::TAU, seed_sigma: 100.0 },
            rows: rows
                .into_iter()
                .map(|(net_gain, pos1, pos2, sigma1, sigma2)| HitchRow { net_gain, pos1, pos2, sigma1, sigma2 })
                .collect(),
        };
        let text = dataset::to_csv(&data);
        let back = dataset::parse("p.csv", &text).unwrap();
        prop_assert_eq!(&back, &data);
        prop_assert_eq!(dataset::to_csv(&back), text);
    }
}
