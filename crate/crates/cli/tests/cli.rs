use std::process::{Command, Output};

use serde_json::Value;

fn refinekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refinekit"))
        .args(args)
        .env_remove("REFINEKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(&refinekit(args))).expect("valid json")
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn eval_grid_has_1025_rows_summing_to_one() {
    let text = stdout(&refinekit(&[
        "eval",
        "--mask",
        "builtin:bspline2",
        "--resolution",
        "10",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# refinekit 0.1.0"));
    let config = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let config: Value = serde_json::from_str(config).unwrap();
    assert_eq!(config["args"]["resolution"], 10);
    assert_eq!(config["mask"]["file"]["name"], "bspline2");
    assert_eq!(lines.next(), Some("x,phi_0,phi_1,uncertainty_radius"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1025);
    for row in &rows {
        assert!((row[1] + row[2] - 1.0).abs() <= 1e-15);
        assert!((row[1] - row[0]).abs() <= 1e-15);
    }
}

#[test]
fn eval_exact_prints_rationals() {
    let text = stdout(&refinekit(&[
        "eval",
        "--mask",
        "builtin:bspline4",
        "--resolution",
        "2",
        "--exact",
    ]));
    let last = text.lines().last().unwrap();
    assert_eq!(last, "1.0,1/6,2/3,1/6,0,0.0");
}

#[test]
fn single_point_enclosure() {
    let text = stdout(&refinekit(&[
        "eval",
        "--mask",
        "builtin:daubechies2",
        "--x",
        "0.3",
        "--tol",
        "1e-8",
    ]));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4] <= 1e-8);
    let total: f64 = rows[0][1..4].iter().sum();
    assert!((total - 1.0).abs() <= 1e-8);
}

#[test]
fn validation_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.mask");
    std::fs::write(
        &bad,
        "name = \"bad\"\nN = 2\ncoeffs = [\"1/2\", \"1\", \"1/4\"]\n",
    )
    .unwrap();
    let bad = bad.to_string_lossy().into_owned();
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["eval", "--mask", &bad], "SumNotTwo"),
        (vec!["eval", "--mask", "builtin:nothing"], "unknown mask"),
        (vec!["eval", "--mask", "builtin:daubechies1"], ""),
        (
            vec!["eval", "--mask", "builtin:bspline2", "--x", "1.5"],
            "outside",
        ),
        (
            vec!["independence", "--mask", "builtin:daubechies2", "--c", "1,-1,0,0"],
            "N = 3",
        ),
        (
            vec!["independence", "--mask", "builtin:bspline2", "--c", "0,0"],
            "",
        ),
        (
            vec!["mz", "--mask", "builtin:bspline2", "--delta", "1.5"],
            "delta",
        ),
        (vec!["mz", "--mask", "builtin:bspline2", "--norm", "l7"], ""),
        (
            vec!["converge", "--mask", "builtin:bspline2", "--f", "cos:1"],
            "unknown test function",
        ),
    ];
    for (args, needle) in cases {
        let out = refinekit(&args);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {err}");
        assert!(err.contains(needle), "{args:?}: {err}");
    }
}

#[test]
fn independence_certifies_d4_difference() {
    let v = json(&[
        "independence",
        "--mask",
        "builtin:daubechies2",
        "--c",
        "1,-1,0",
        "--depth",
        "16",
    ]);
    let verdict = &v["result"]["verdict"];
    assert_eq!(verdict["case"], "certified");
    assert!(verdict["min_norm"].as_f64().unwrap() > 0.0);
    assert_eq!(v["result"]["mode"], "float");
    assert_eq!(v["config"]["version"], "0.1.0");
}

#[test]
fn independence_exact_annihilation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trap.toml");
    std::fs::write(
        &path,
        "name = \"trapezoid\"\nN = 3\ncoeffs = [\"1/2\", \"1/2\", \"1/2\", \"1/2\"]\n",
    )
    .unwrap();
    let path = path.to_string_lossy().into_owned();
    let v = json(&["independence", "--mask", &path, "--c", "1,-1,1", "--depth", "6"]);
    assert_eq!(v["result"]["mode"], "exact");
    assert_eq!(v["result"]["verdict"]["case"], "annihilated");
    assert_eq!(v["result"]["verdict"]["word"], "0");
    let measures = v["result"]["zero_set"].as_array().unwrap();
    assert!(measures.iter().all(|m| m["measure"].as_f64().unwrap() >= 0.5));
}

#[test]
fn mz_constant_below_b() {
    let v = json(&[
        "mz",
        "--mask",
        "builtin:bspline2",
        "--delta",
        "0.5",
        "--norm",
        "l1",
        "--seed",
        "7",
        "--resolution",
        "10",
    ]);
    let r = &v["result"];
    assert_eq!(r["b"], 1.0);
    let c = r["entries"][0]["c"].as_f64().unwrap();
    assert!(c <= 1.0 && (c - 0.25).abs() < 2e-3, "C = {c}");
    assert_eq!(v["config"]["args"]["seed"], 7);
}

#[test]
fn converge_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("jump.csv");
    let csv_arg = csv.to_string_lossy().into_owned();
    let v = json(&[
        "converge",
        "--mask",
        "builtin:bspline2",
        "--f",
        "jump:0.5",
        "--levels",
        "8",
        "--csv",
        &csv_arg,
    ]);
    let report = &v["result"]["report"];
    assert_eq!(report["levels"], 8);
    assert!(report["rows"].as_array().unwrap().is_empty());
    assert!(report["note"].as_str().unwrap().contains("cannot decide"));
    // the largest last-level change sits next to the jump
    let x = report["peak_increment_x"].as_f64().unwrap();
    assert!((x - 0.5).abs() < 0.01, "peak at {x}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let cols: Vec<&str> = header.split(',').collect();
    assert_eq!(cols.first(), Some(&"x"));
    assert_eq!(&cols[cols.len() - 2..], ["S_8", "f_star"]);
    assert_eq!(cols.len(), 1 + 9 + 2);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1 << 10);
    for row in &rows {
        let s = row[10];
        let fstar = row[11];
        assert!(s >= row[1].abs() - 1e-12 && fstar >= row[9].abs());
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = [
        "mz",
        "--mask",
        "builtin:bspline3",
        "--delta",
        "0.3,0.6",
        "--resolution",
        "8",
    ];
    let one = Command::new(env!("CARGO_BIN_EXE_refinekit"))
        .args(args)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_refinekit"))
        .args(args)
        .env("REFINEKIT_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success() && many.status.success());
    assert_eq!(one.stdout, many.stdout);
}
