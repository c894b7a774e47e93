use std::process::{Command, Output};

fn inhomtree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inhomtree"))
        .args(args)
        .env_remove("INHOMTREE_SEED")
        .output()
        .expect("binary runs")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn grow_writes_parent_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = inhomtree(&[
        "grow",
        "--ell",
        "2",
        "--n",
        "1000",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "vertex_id,parent_id,kind,creation_step,leaf_index");
    assert_eq!(rows.len() - 1, 1502);
    assert!(text.starts_with("# inhomtree "));
    assert!(text.lines().next().unwrap().ends_with("seed=7"));
}

#[test]
fn seed_comes_from_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_inhomtree"));
        c.args(["grow", "--ell", "1", "--n", "50"]).args(extra);
        match env {
            Some(s) => c.env("INHOMTREE_SEED", s),
            None => c.env_remove("INHOMTREE_SEED"),
        };
        c.output().unwrap()
    };
    let a = run(Some("11"), &[]);
    let b = run(None, &["--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run(Some("eleven"), &[]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(inhomtree(&[]).status.code(), Some(2));
    assert_eq!(inhomtree(&["grow", "--ell", "2"]).status.code(), Some(2));
    assert_eq!(
        inhomtree(&["grow", "--ell", "0", "--n", "5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        inhomtree(&["check", "--suite", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        inhomtree(&["experiment", "exponent", "--ell", "2", "--npow", "9:3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(inhomtree(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_check_passes() {
    let out = inhomtree(&[
        "check", "--suite", "oracle", "--ell", "2", "--n", "4", "--reps", "1000000", "--seed", "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "oracle");
    let criteria = report["criteria"].as_array().unwrap();
    assert!(!criteria.is_empty());
    assert!(criteria.iter().all(|c| c["passed"] == true));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().all(|l| l.starts_with("[PASS]")));
}

#[test]
fn failing_check_exits_1() {
    // Two draws per KS comparison cannot meet the distance bound.
    let out = inhomtree(&[
        "check",
        "--suite",
        "distributions",
        "--reps",
        "2",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[FAIL]"));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "distributions");
}

#[test]
fn output_does_not_depend_on_threads() {
    let args = [
        "couple", "--ell", "2", "--n", "512,2048", "--reps", "6", "--seed", "5",
    ];
    let one = inhomtree(&[&args[..], &["--threads", "1"]].concat());
    let three = inhomtree(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, three.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(data_lines(&text).len(), 1 + 2 * 6);
}

#[test]
fn exponent_experiment_has_slope_column() {
    let out = inhomtree(&[
        "experiment",
        "exponent",
        "--ell",
        "1,2,3",
        "--npow",
        "6:10",
        "--reps",
        "8",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&text);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "slope")
        .expect("slope column");
    assert_eq!(rows.len(), 4);
    for (i, row) in rows[1..].iter().enumerate() {
        let slope: f64 = row.split(',').nth(col).unwrap().parse().unwrap();
        let ell = (i + 1) as f64;
        assert!(
            (slope - ell / (ell + 1.0)).abs() < 0.2,
            "ell={ell}: {slope}"
        );
    }
}

#[test]
fn linebreak_json_round_trips() {
    let out = inhomtree(&["linebreak", "--ell", "2", "--n", "200", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let e = inhomtree::io::read_embellished_json(&text).unwrap();
    assert_eq!(e.n(), 200);
    let meta = inhomtree::io::read_json_meta(&text).unwrap().unwrap();
    assert_eq!(meta.seed, 4);
}

#[test]
fn urn_moments_csv() {
    let out = inhomtree(&[
        "urn", "moments", "--ell", "2", "--npow", "8,10", "--k", "1,2", "--reps", "50",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    // Two models, two sizes, two k.
    assert_eq!(data_lines(&text).len(), 1 + 8);
}
