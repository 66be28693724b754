//! End-to-end tests of the `lsagc` binary: exit codes, artifact layout,
//! byte-level determinism, and the synth → connectivity → classify flow.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lsagc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsagc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL_SPEC: &str = "\
[network]
nodes = 5
topology = \"chain\"
coupling = 0.8
lag_order = 1
noise_sd = 1.0
samples = 120

[subjects]
count = 4
";

const COHORT_SPEC: &str = "\
[network]
nodes = 5
topology = \"chain\"
coupling = 0.8
lag_order = 1
noise_sd = 1.0
samples = 150

[cohort]
class0 = 6
class1 = 6
delta_edges = [[1, 0], [3, 2]]
delta_coupling = 0.7
subject_noise = 0.02
";

const QUICK_GRID: &str = "\
[grid]
p = [2, 3]
m = [1]

[training]
epochs = 60
learning_rate = 0.01

[classifier]
hidden = 8
heads = 2
";

#[test]
fn synth_writes_subjects_truth_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SMALL_SPEC).unwrap();
    let out = lsagc(
        &["synth", "--spec", "spec.toml", "--out", "data", "--seed", "7"],
        dir.path(),
    );
    assert_exit(&out, 0);
    let data = dir.path().join("data");
    for i in 0..4 {
        assert!(data.join(format!("subject_0{i}.csv")).exists());
    }
    assert!(data.join("truth.csv").exists());
    assert!(data.join("manifest.json").exists());
    assert!(!data.join("labels.csv").exists(), "single-class mode has no labels");

    // The manifest parses and records the argument vector and null stamps.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["root"], 7);
    assert!(manifest["command"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v == "synth"));
    assert!(manifest["timestamps"]["start"].is_null());
    assert!(manifest["config_hash"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));

    // Truth of a 5-node chain: the four off-diagonal forward edges.
    let truth = fs::read_to_string(data.join("truth.csv")).unwrap();
    assert!(truth.starts_with(",x00,x01,x02,x03,x04\n"));
    assert!(truth.contains("x00,0,1,0,0,0"));
}

#[test]
fn synth_is_byte_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SMALL_SPEC).unwrap();
    for out_dir in ["a", "b"] {
        let out = lsagc(
            &["synth", "--spec", "spec.toml", "--out", out_dir, "--seed", "11"],
            dir.path(),
        );
        assert_exit(&out, 0);
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/subject_00.csv"), read("b/subject_00.csv"));
    assert_eq!(read("a/subject_03.csv"), read("b/subject_03.csv"));
    assert_eq!(read("a/truth.csv"), read("b/truth.csv"));

    let out = lsagc(
        &["synth", "--spec", "spec.toml", "--out", "c", "--seed", "12"],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert_ne!(read("a/subject_00.csv"), read("c/subject_00.csv"));
}

#[test]
fn synth_manifests_differ_only_in_argv_across_dirs() {
    // Same seed, different --out: everything except the recorded command
    // (and nothing else) may differ.
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SMALL_SPEC).unwrap();
    for out_dir in ["m1", "m2"] {
        assert_exit(
            &lsagc(
                &["synth", "--spec", "spec.toml", "--out", out_dir, "--seed", "3"],
                dir.path(),
            ),
            0,
        );
    }
    let m1: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m1/manifest.json")).unwrap())
            .unwrap();
    let m2: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m2/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m1["config_hash"], m2["config_hash"]);
    assert_eq!(m1["seeds"], m2["seeds"]);
    assert_ne!(m1["command"], m2["command"]);
}

#[test]
fn malformed_spec_exits_2_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("spec.toml"),
        SMALL_SPEC.replace("topology", "topologee"),
    )
    .unwrap();
    let out = lsagc(
        &["synth", "--spec", "spec.toml", "--out", "data"],
        dir.path(),
    );
    assert_exit(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("topologee"), "error names the bad key: {stderr}");
    assert!(!dir.path().join("data").exists(), "no partial outputs");
}

#[test]
fn missing_spec_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsagc(
        &["synth", "--spec", "nope.toml", "--out", "data"],
        dir.path(),
    );
    assert_exit(&out, 3);
}

#[test]
fn connectivity_lsagc_recovers_chain_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SMALL_SPEC).unwrap();
    assert_exit(
        &lsagc(
            &["synth", "--spec", "spec.toml", "--out", "data", "--seed", "5"],
            dir.path(),
        ),
        0,
    );
    for out_csv in ["conn_a.csv", "conn_b.csv"] {
        let out = lsagc(
            &[
                "connectivity",
                "--input",
                "data/subject_00.csv",
                "--method",
                "lsagc",
                "--p",
                "3",
                "--m",
                "1",
                "--out",
                out_csv,
            ],
            dir.path(),
        );
        assert_exit(&out, 0);
    }
    let a = fs::read(dir.path().join("conn_a.csv")).unwrap();
    let b = fs::read(dir.path().join("conn_b.csv")).unwrap();
    assert_eq!(a, b, "identical invocations give identical bytes");

    let (names, values) = lsagc_cli::formats::read_matrix(&dir.path().join("conn_a.csv")).unwrap();
    assert_eq!(names.len(), 5);
    // Chain edges 0→1…3→4 should carry the four largest off-diagonal scores.
    let mut scored: Vec<((usize, usize), f64)> = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                scored.push(((i, j), values[[i, j]]));
            }
        }
    }
    scored.sort_by(|x, y| y.1.total_cmp(&x.1));
    let top: Vec<(usize, usize)> = scored[..4].iter().map(|(e, _)| *e).collect();
    for edge in [(0, 1), (1, 2), (2, 3), (3, 4)] {
        assert!(top.contains(&edge), "chain edge {edge:?} missing from top-4 {top:?}");
    }
}

#[test]
fn connectivity_correlation_detects_equal_series() {
    let dir = tempfile::tempdir().unwrap();
    // x1 = x0 exactly; correlation must be 1 at (0,1) and (1,0).
    let body = "# rows=3 cols=6\nx0,x1,x2\n1,2,3,4,5,6\n1,2,3,4,5,6\n6,1,4,2,5,3\n";
    fs::write(dir.path().join("ts.csv"), body).unwrap();
    let out = lsagc(
        &[
            "connectivity",
            "--input",
            "ts.csv",
            "--method",
            "correlation",
            "--out",
            "corr.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let (_, values) = lsagc_cli::formats::read_matrix(&dir.path().join("corr.csv")).unwrap();
    assert_eq!(values[[0, 1]], 1.0);
    assert_eq!(values[[1, 0]], 1.0);
    assert_eq!(values[[0, 0]], 0.0, "diagonal is zeroed");
}

#[test]
fn connectivity_validation_failures_exit_4_and_usage_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SMALL_SPEC).unwrap();
    assert_exit(
        &lsagc(
            &["synth", "--spec", "spec.toml", "--out", "data"],
            dir.path(),
        ),
        0,
    );
    // --p larger than N is an engine validation failure → 4.
    let out = lsagc(
        &[
            "connectivity",
            "--input",
            "data/subject_00.csv",
            "--p",
            "9",
            "--m",
            "1",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 4);
    // Missing --p/--m for lsagc is a usage error → 2.
    let out = lsagc(
        &[
            "connectivity",
            "--input",
            "data/subject_00.csv",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
    // Malformed input CSV → 4.
    fs::write(dir.path().join("bad.csv"), "not,a,time,series\n").unwrap();
    let out = lsagc(
        &[
            "connectivity",
            "--input",
            "bad.csv",
            "--p",
            "2",
            "--m",
            "1",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert_exit(&out, 4);
}

#[test]
fn sign_flag_mirrors_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), SMALL_SPEC).unwrap();
    assert_exit(
        &lsagc(
            &["synth", "--spec", "spec.toml", "--out", "data"],
            dir.path(),
        ),
        0,
    );
    for (sign, name) in [("positive", "pos.csv"), ("paper", "neg.csv")] {
        assert_exit(
            &lsagc(
                &[
                    "connectivity",
                    "--input",
                    "data/subject_00.csv",
                    "--p",
                    "2",
                    "--m",
                    "1",
                    "--sign",
                    sign,
                    "--out",
                    name,
                ],
                dir.path(),
            ),
            0,
        );
    }
    let (_, pos) = lsagc_cli::formats::read_matrix(&dir.path().join("pos.csv")).unwrap();
    let (_, neg) = lsagc_cli::formats::read_matrix(&dir.path().join("neg.csv")).unwrap();
    for (a, b) in pos.iter().zip(neg.iter()) {
        assert_eq!(*a, -*b);
    }
}

#[test]
fn classify_end_to_end_reports_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), COHORT_SPEC).unwrap();
    fs::write(dir.path().join("grid.toml"), QUICK_GRID).unwrap();
    assert_exit(
        &lsagc(
            &["synth", "--spec", "spec.toml", "--out", "cohort", "--seed", "6"],
            dir.path(),
        ),
        0,
    );
    assert!(dir.path().join("cohort/labels.csv").exists());
    assert!(dir.path().join("cohort/truth_class1.csv").exists());

    for report in ["r1/report.txt", "r2/report.txt"] {
        let out = lsagc(
            &[
                "classify",
                "--cohort",
                "cohort",
                "--grid",
                "grid.toml",
                "--folds",
                "2",
                "--seed",
                "9",
                "--report",
                report,
            ],
            dir.path(),
        );
        assert_exit(&out, 0);
    }
    let text = fs::read_to_string(dir.path().join("r1/report.txt")).unwrap();
    assert!(text.contains("lsAGC Accuracy (%)"), "{text}");
    assert!(text.contains("Mean"));
    assert!(text.contains("Std"));
    assert!(text.contains("Subjects: 12"));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r1/report.txt.json")).unwrap())
            .unwrap();
    assert_eq!(json["n_subjects"], 12);
    assert_eq!(json["folds"], 2);
    assert_eq!(json["n_samples_per_method"], 24);
    assert_eq!(json["subject_level"]["per_fold"].as_array().unwrap().len(), 2);

    // Identical invocations → identical reports (and manifests).
    let r1 = fs::read(dir.path().join("r1/report.txt")).unwrap();
    let r2 = fs::read(dir.path().join("r2/report.txt")).unwrap();
    assert_eq!(r1, r2);
    let j1 = fs::read(dir.path().join("r1/report.txt.json")).unwrap();
    let j2 = fs::read(dir.path().join("r2/report.txt.json")).unwrap();
    assert_eq!(j1, j2);
    assert!(dir.path().join("r1/manifest.json").exists());
}

#[test]
fn classify_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), COHORT_SPEC).unwrap();
    assert_exit(
        &lsagc(
            &["synth", "--spec", "spec.toml", "--out", "cohort"],
            dir.path(),
        ),
        0,
    );
    let out = lsagc(
        &[
            "classify",
            "--cohort",
            "cohort",
            "--folds",
            "0",
            "--report",
            "r.txt",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("folds"), "{stderr}");
}

#[test]
fn unknown_flags_and_subcommands_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(&lsagc(&["frobnicate"], dir.path()), 2);
    assert_exit(&lsagc(&["synth", "--bogus"], dir.path()), 2);
}
