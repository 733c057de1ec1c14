use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rankte(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankte"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("henon.csv");
    let out = rankte(&[
        "simulate",
        "--csv",
        path(&csv),
        "--seed",
        "4",
        "--set",
        "system=henon",
        "--set",
        "N=300",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("X1,X2,X3"));
    assert_eq!(text.lines().count(), 301);
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 4);
    assert_eq!(sidecar["edges"].as_array().unwrap().len(), 2);
    assert_eq!(sidecar["edges"][0]["source"], "X1");

    let res = dir.path().join("res");
    let out = rankte(&[
        "analyze",
        path(&csv),
        "--out",
        path(&res),
        "--M",
        "19",
        "--measures",
        "PTERV,PTE",
        "--tests",
        "surrogate",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(res.join("rejections.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("pair,measure,test,rejections,R"));
    assert_eq!(lines.count(), 12);
    let records = fs::read_to_string(res.join("realizations.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 12);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(res.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("X1->X2\tPTERV"));
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(
        &cfg,
        "system = linear\nN = 400\nc = 1\nmeasures = PTERV, PSTE\ntests = surrogate, gaussian, gamma1, gamma2\nM = 19\nR = 3\nseed = 12\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = rankte(&["experiment", "--config", path(&cfg), "--out", path(&out_dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            fs::read(out_dir.join("rejections.csv")).unwrap(),
            fs::read(out_dir.join("realizations.jsonl")).unwrap(),
        )
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let table = String::from_utf8(a.0).unwrap();
    // 6 pairs x (PTERV 4 tests + PSTE 4 tests)
    assert_eq!(table.lines().count(), 1 + 6 * 8);
    assert!(table.lines().skip(1).all(|l| l.ends_with(",3")));
}

#[test]
fn sweep_writes_plot_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = rankte(&[
        "sweep",
        "--values",
        "coupling:0,0.4",
        "--out",
        path(&out_dir),
        "--set",
        "system=henon",
        "--set",
        "N=256",
        "--measures",
        "PTERV",
        "--M",
        "9",
        "--realizations",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(text.starts_with("coupling,pair,measure,mean_statistic,test,rejections,R"));
    assert_eq!(text.lines().count(), 1 + 2 * 6);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "system = henon\nN = 100\nmeasures =\n").unwrap();
    let out = rankte(&["experiment", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("measure"));

    let out = rankte(&["experiment", "--set", "system=henon", "--set", "N=100", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rankte(&["experiment", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));

    // too short for the embedding
    let csv = dir.path().join("short.csv");
    fs::write(&csv, "a,b\n1,2\n2,1\n").unwrap();
    let out = rankte(&["analyze", path(&csv), "--out", path(&dir.path().join("o")), "--m", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("need N >="));
}

#[test]
fn runtime_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = rankte(&["analyze", path(&dir.path().join("missing.csv")), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
}
