//! End-to-end tests of the `curvlab` binary: exit-code contract, report
//! determinism, and the documented subcommand surface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn curvlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("CURVLAB_THREADS")
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

#[test]
fn gen_then_osserman_pass_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(
        dir.path(),
        &["gen", "--type", "constant", "--n", "3", "--lambda", "1", "-o", "s3.json"],
    );
    assert_exit(&out, 0);
    let out = curvlab(
        dir.path(),
        &["check", "osserman", "s3.json", "--samples", "100", "--seed", "1"],
    );
    assert_exit(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn duality_on_single_plane_exits_two_with_half_residual() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &curvlab(dir.path(), &["gen", "--type", "plane", "--n", "3", "-o", "p.json"]),
        0,
    );
    let out = curvlab(
        dir.path(),
        &[
            "check", "duality", "p.json", "--samples", "100", "--seed", "1", "--out",
            "report.json",
        ],
    );
    assert_exit(&out, 2);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let residual = report["max_residual"].as_f64().unwrap();
    assert!((residual - 0.5).abs() < 0.05, "max_residual {residual} should be near 1/2");
    assert_eq!(report["check"], "duality");
    assert_eq!(report["verdict"], false);
}

#[test]
fn missing_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(dir.path(), &["check", "osserman", "missing.json"]);
    assert_exit(&out, 1);
}

#[test]
fn invalid_tensor_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        r#"{"n":2,"format":"sparse-ijkl","entries":[[0,1,0,1,1.0]]}"#,
    )
    .unwrap();
    let out = curvlab(dir.path(), &["check", "osserman", "bad.json"]);
    assert_exit(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("antisymmetry"));
    // explicit projection turns the same file into a valid input
    let out = curvlab(dir.path(), &["check", "osserman", "bad.json", "--project"]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(2));
}

#[test]
fn unknown_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(dir.path(), &["check", "osserman", "x.json", "--no-such-flag"]);
    assert_exit(&out, 1);
}

#[test]
fn help_exits_zero_and_lists_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(dir.path(), &["--help"]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["gen", "check", "experiment", "falsify"] {
        assert!(text.contains(sub), "--help does not mention `{sub}`");
    }
    let out = curvlab(dir.path(), &["check", "duality", "--help"]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("--probes"));
    assert!(text.contains("default"), "defaults should be printed in help");
}

#[test]
fn reports_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &curvlab(
            dir.path(),
            &["gen", "--type", "complex", "--n", "4", "--lambda0", "1", "--lambda1", "1", "-o", "c.json"],
        ),
        0,
    );
    for (out, csv) in [("r1.json", "r1.csv"), ("r2.json", "r2.csv")] {
        let run = curvlab(
            dir.path(),
            &[
                "check", "osserman", "c.json", "--samples", "60", "--seed", "7", "--out", out,
                "--csv", csv,
            ],
        );
        assert_exit(&run, 0);
    }
    assert_eq!(
        fs::read(dir.path().join("r1.json")).unwrap(),
        fs::read(dir.path().join("r2.json")).unwrap()
    );
    assert_eq!(
        fs::read(dir.path().join("r1.csv")).unwrap(),
        fs::read(dir.path().join("r2.csv")).unwrap()
    );
    // thread count must not change results
    let run = curvlab(
        dir.path(),
        &[
            "check", "osserman", "c.json", "--samples", "60", "--seed", "7", "--out", "r3.json",
            "--csv", "r3.csv", "--threads", "1",
        ],
    );
    assert_exit(&run, 0);
    assert_eq!(
        fs::read(dir.path().join("r1.json")).unwrap(),
        fs::read(dir.path().join("r3.json")).unwrap()
    );
}

#[test]
fn derivative_check_passes_on_random_tensor() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &curvlab(
            dir.path(),
            &["gen", "--type", "random", "--n", "4", "--seed", "5", "-o", "r.json"],
        ),
        0,
    );
    let out = curvlab(
        dir.path(),
        &["check", "derivative", "r.json", "--trials", "30", "--seed", "2", "--out", "d.json"],
    );
    assert_exit(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    assert_eq!(report["check"], "derivative");
    assert_eq!(report["verdict"], true);
}

#[test]
fn equivalence_experiment_from_corpus_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("corpus.json"),
        r#"[
            {"kind":"constant","n":4,"params":{"lambda":1.0}},
            {"kind":"plane","n":3}
        ]"#,
    )
    .unwrap();
    let out = curvlab(
        dir.path(),
        &[
            "experiment", "equivalence", "--corpus", "corpus.json", "--samples", "80", "--seed",
            "3", "--out", "rows.csv", "--format", "csv",
        ],
    );
    // both rows agree (pass,pass) and (fail,fail), so the experiment passes
    assert_exit(&out, 0);
    let csv = fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("true,true,true"));
    assert!(lines[2].contains("false,false,true"));
}

#[test]
fn falsify_smoke_run_writes_report_and_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(
        dir.path(),
        &[
            "falsify", "--n", "4", "--delta", "0.1", "--budget", "50", "--seed", "1", "--out",
            "f.json", "--save-candidate", "cand.json",
        ],
    );
    assert_exit(&out, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.json")).unwrap()).unwrap();
    assert_eq!(report["check"], "falsify");
    assert!(report["best_residual"].as_f64().unwrap() > 0.0);
    // the saved candidate is a loadable, valid tensor
    let check = curvlab(dir.path(), &["check", "osserman", "cand.json", "--samples", "20"]);
    assert!(check.status.code() == Some(0) || check.status.code() == Some(2));
}

#[test]
fn gen_perturbed_from_base_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &curvlab(
            dir.path(),
            &["gen", "--type", "complex", "--n", "4", "-o", "base.json"],
        ),
        0,
    );
    let out = curvlab(
        dir.path(),
        &[
            "gen", "--type", "perturbed", "--n", "4", "--base", "base.json", "--eps", "0.1",
            "--seed", "3", "-o", "pert.json",
        ],
    );
    assert_exit(&out, 0);
    // the perturbed tensor now fails the osserman check
    let check = curvlab(dir.path(), &["check", "osserman", "pert.json", "--samples", "100"]);
    assert_exit(&check, 2);
}

#[test]
fn bad_threads_value_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = curvlab(dir.path(), &["check", "osserman", "x.json", "--threads", "0"]);
    assert_exit(&out, 1);
}
