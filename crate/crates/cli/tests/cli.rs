use std::process::{Command, Output};

use retlaw_core::exact::SurvivalCurve;

const FAIR: &str = r#"{"kind":"iid","alphabet":["a","b"],"weights":[0.5,0.5]}"#;

fn retlaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retlaw"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn analyze_reports_period_structure() {
    let out = retlaw(&["analyze", "--pattern", "aaaabbaaaabbaaa"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["o_A"], 6);
    assert_eq!(v["R_A"], serde_json::json!([13, 14]));
    assert_eq!(v["r_A"], 2);
    assert_eq!(v["n_A"], 13);
    assert_eq!(v["suffix_n_a"], "aabbaaaabbaaa");
}

#[test]
fn analyze_csv_lists_every_pattern() {
    let out = retlaw(&[
        "analyze",
        "--pattern",
        "aaa",
        "--pattern",
        "abab",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("aaa,3,1,3,0,"));
    assert!(rows[2].starts_with("abab,4,2,2,0,"));
}

#[test]
fn exact_return_curve_round_trips() {
    let out = retlaw(&[
        "exact",
        "--source",
        FAIR,
        "--pattern",
        "aa",
        "--law",
        "return",
        "--t",
        "30",
    ]);
    assert!(out.status.success());
    let values = SurvivalCurve::values_from_csv(&stdout(&out)).unwrap();
    assert_eq!(values.len(), 31);
    assert_eq!(values[0], 1.0);
    assert_eq!(values[1], 0.5);
    // a b then a run of two: P_A(τ > 3) = 1/2 · (1 - 1/4)
    assert!((values[3] - 0.375).abs() < 1e-15);
}

#[test]
fn exact_sojourn_json_matches_geometric() {
    let out = retlaw(&[
        "exact",
        "--source",
        FAIR,
        "--pattern",
        "aa",
        "--law",
        "sojourn",
        "--t",
        "5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let p = v["probabilities"].as_array().unwrap();
    for (k, pk) in p.iter().enumerate() {
        assert!((pk.as_f64().unwrap() - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
    }
}

#[test]
fn source_spec_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("markov.json");
    std::fs::write(
        &spec,
        r#"{"kind":"markov","alphabet":["a","b"],"transition":[[0.7,0.3],[0.4,0.6]]}"#,
    )
    .unwrap();
    let out = retlaw(&[
        "theory",
        "--source",
        spec.to_str().unwrap(),
        "--pattern",
        "abaab",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["o_A"], 3);
    assert!((v["rho_limit"].as_f64().unwrap() - 0.4 * 0.7 * 0.3).abs() < 1e-15);
}

#[test]
fn verify_writes_reports_and_passes_for_short_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = retlaw(&[
        "verify",
        "--source",
        FAIR,
        "--pattern",
        "aaaaaaaaaaaa",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let reports: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(reports.as_array().unwrap().len() >= 8);
    assert!(dir.path().join("verify.txt").exists());
    // no staging files left behind
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .ends_with(".partial")));
}

#[test]
fn failing_envelope_exits_one() {
    let out = retlaw(&["verify", "--source", FAIR, "--pattern", "aaaaaaaaaaaaaaaa"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "checks-failed");
}

#[test]
fn usage_errors_exit_two() {
    let missing_source = retlaw(&["exact", "--pattern", "aa"]);
    assert_eq!(missing_source.status.code(), Some(2));
    assert_eq!(stderr_json(&missing_source)["error"], "usage");
    let bad_symbol = retlaw(&["exact", "--source", FAIR, "--pattern", "ac"]);
    assert_eq!(bad_symbol.status.code(), Some(2));
    assert_eq!(retlaw(&["nonsense"]).status.code(), Some(2));
    assert_eq!(
        retlaw(&[
            "simulate",
            "--source",
            FAIR,
            "--pattern",
            "aa",
            "--level",
            "1.5"
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn model_errors_exit_three() {
    let out = retlaw(&[
        "exact",
        "--source",
        r#"{"kind":"iid","alphabet":["a","b"],"weights":[0.7,0.7]}"#,
        "--pattern",
        "aa",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "model");
}

#[test]
fn moments_table_has_one_row_per_beta() {
    let out = retlaw(&[
        "moments",
        "--source",
        FAIR,
        "--pattern",
        "aaaa",
        "--beta",
        "1",
        "--beta",
        "2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let kac: f64 = rows[0][2].parse().unwrap();
    assert!((kac - 1.0).abs() < 1e-9);
}

#[test]
fn simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let out = retlaw(&[
            "simulate",
            "--source",
            FAIR,
            "--pattern",
            "aab",
            "--samples",
            "2000",
            "--trajectory-length",
            "50000",
            "--workers",
            workers,
            "--seed",
            "11",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&path)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let first = run("a", "4");
    assert_eq!(first.len(), 5);
    assert_eq!(first, run("b", "4"));
    assert_ne!(first, run("c", "3"));
}
