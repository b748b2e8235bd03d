use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cauchy-lab"))
        .args(args)
        .env_remove("CAUCHY_LAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gap_upper_range_matches_closed_form() {
    let o = lab(&["gap", "--n", "3", "--beta", "5", "--m", "1024"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["closed_form"].as_f64(), Some(8.0));
    assert_eq!(r["range_tag"], "upper");
    assert!(r["rel_error"].as_f64().unwrap().abs() < 1e-3);
}

#[test]
fn gap_rejects_non_probability() {
    let o = lab(&["gap", "--n", "2", "--beta", "0.9"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta > n/2"));
}

#[test]
fn gap_on_the_line_lower_range() {
    let o = lab(&["gap", "--n", "1", "--beta", "1"]);
    assert_eq!(json(&o)["closed_form"].as_f64(), Some(0.25));
    // The truncated grid sits well above the bottom of the continuous
    // spectrum; pushing the truncation out brings it within a few percent.
    let o = lab(&[
        "gap", "--n", "1", "--beta", "1", "--m", "2048", "--delta", "1e-16", "--tol", "0.05",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert!(r["numeric_gap"].as_f64().unwrap() >= 0.25 - 1e-6);
}

#[test]
fn sweep_rows_are_ordered_continuous_and_reproducible() {
    let args = [
        "sweep",
        "--n",
        "2",
        "--beta-min",
        "1.1",
        "--beta-max",
        "6",
        "--steps",
        "50",
    ];
    let a = lab(&args);
    assert_eq!(code(&a), 0);
    let rows = csv_rows(&String::from_utf8(a.stdout.clone()).unwrap());
    assert_eq!(rows.len(), 50);
    let beta: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let closed: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    let step = (6.0 - 1.1) / 49.0;
    for i in 1..rows.len() {
        assert!(beta[i] > beta[i - 1]);
        // |d/dβ| of every branch is at most 2(β − 1) < 10 on this range.
        assert!((closed[i] - closed[i - 1]).abs() < 10.0 * step);
    }
    let b = lab(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_rejects_bad_range() {
    let o = lab(&[
        "sweep",
        "--n",
        "2",
        "--beta-min",
        "0.8",
        "--beta-max",
        "3",
        "--steps",
        "5",
    ]);
    assert_eq!(code(&o), 1);
    let o = lab(&[
        "sweep",
        "--n",
        "2",
        "--beta-min",
        "3",
        "--beta-max",
        "2",
        "--steps",
        "5",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_passes_and_skips() {
    let o = lab(&["verify", "--n", "2", "--beta", "3", "--trials", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&o);
    assert_eq!(doc["factorization"]["pass"], true);
    assert_eq!(doc["cd_witnesses"].as_array().unwrap().len(), 4);

    let o = lab(&["verify", "--n", "2", "--beta", "2", "--trials", "10"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    for r in doc["identities"]["reports"].as_array().unwrap() {
        let tag = r["tag"].as_str().unwrap();
        let skipped = r.get("skipped").is_some();
        match tag {
            "IPP3" | "IPP4" | "GRG" => assert!(skipped, "{tag} should be skipped"),
            "IPP1" | "IPP2" | "IRG" | "GAMMABIS" | "LOWFACT" => assert!(!skipped),
            _ => {}
        }
    }
}

#[test]
fn verify_negative_control_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    let o = lab(&[
        "verify",
        "--n",
        "2",
        "--beta",
        "3",
        "--trials",
        "10",
        "--corrupt-ipp1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let ipp1 = &doc["identities"]["reports"][0];
    assert_eq!(ipp1["tag"], "IPP1");
    assert!(ipp1["rel_err"].as_f64().unwrap() > 0.1);
}

#[test]
fn deficit_of_linear_function_vanishes_in_upper_range() {
    let o = lab(&[
        "deficit", "--range", "upper", "--n", "3", "--beta", "5", "--f", "linear",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    let deficit: f64 = rows[0][7].parse().unwrap();
    assert!(deficit.abs() < 1e-8);
}

#[test]
fn deficit_range_mismatch_is_a_config_error() {
    let o = lab(&[
        "deficit", "--range", "upper", "--n", "3", "--beta", "2", "--f", "linbump",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn rayleigh_approaches_the_bottom_of_the_spectrum() {
    let o = lab(&[
        "rayleigh",
        "--family",
        "power",
        "--n",
        "2",
        "--beta",
        "1.8",
        "--eps-from-limit",
        "1e-2,1e-3,1e-4",
    ]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    let q: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(q.windows(2).all(|w| w[1] < w[0]));
    assert!(q.iter().all(|v| *v > 0.64));
    assert!((q[2] - 0.64).abs() < 1e-3);
}

#[test]
fn sample_writes_every_point_and_moment_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pts.csv");
    let o = lab(&[
        "sample",
        "--n",
        "2",
        "--beta",
        "3",
        "--count",
        "1000000",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv_rows(&text).len(), 1_000_000);
    assert!(text.lines().any(|l| l.starts_with("# moment,inv_omega")));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    write(&cfg, "# gap run\nn = 3\nbeta = 5\nm = 256\nell_max = 3\n");
    let o = lab(&["gap", "--config", cfg.to_str().unwrap(), "--beta", "4.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["beta"].as_f64(), Some(4.5));
    assert_eq!(r["m"].as_u64(), Some(256));

    write(&cfg, "n = 3\nbeta = 5\ncolour = red\n");
    assert_eq!(code(&lab(&["gap", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn default_output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cauchy-lab"))
        .args(["gap", "--n", "2", "--beta", "4", "--m", "256"])
        .env("CAUCHY_LAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let doc: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gap.json")).unwrap())
            .unwrap();
    assert_eq!(doc["closed_form"].as_f64(), Some(6.0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&lab(&["gap", "--beta", "3"])), 1);
    assert_eq!(code(&lab(&["gap", "--n", "x", "--beta", "3"])), 1);
    assert_eq!(code(&lab(&["frobnicate"])), 1);
    assert_eq!(code(&lab(&["--help"])), 0);
}
