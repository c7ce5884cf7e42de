use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn syncap_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_syncap"));
    cmd.args(args).env_remove("SYNCAP_GUARD_N");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn syncap(args: &[&str]) -> Run {
    syncap_env(args, &[])
}

fn json_of(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.push("--json");
    let r = syncap(&all);
    assert_eq!(r.code, 0, "{}", r.stderr);
    serde_json::from_str(&r.stdout).unwrap()
}

fn without_meta(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("meta");
    v
}

fn records(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("runs.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn series_reports_constants_and_expansion() {
    let r = syncap(&["series", "--L", "1000", "--alpha", "0.01"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("0.4901"));
    assert!(r.stdout.contains("0.93846"));

    let v = json_of(&["series", "--L", "10"]);
    let tail = v["results"]["tail_bound"].as_f64().unwrap();
    assert!((tail - 204.0 / 4096.0).abs() < 1e-15);
    assert_eq!(v["params"]["L"], 10);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["series", "--L", "0"][..],
        &["series", "--alpha", "1.5"],
        &["nonsense"],
        &["mi", "--alpha", "0.1"],
        &["law", "--x", "012", "--alpha", "0.1"],
        &["sweep", "--n", "1,2"],
        &["sweep", "--alpha", "0.01,0.005"],
    ] {
        let r = syncap(args);
        assert_eq!(r.code, 1, "{args:?}: {}", r.stderr);
        assert!(!r.stderr.is_empty());
    }
    assert_eq!(syncap(&["--help"]).code, 0);
}

#[test]
fn mi_examples() {
    let v = json_of(&["mi", "--n", "1", "--alpha", "0.1", "--iid", "0.5"]);
    let i = v["results"]["mutual_information"].as_f64().unwrap();
    assert!((i - 1.0).abs() < 1e-12);

    let v = json_of(&["mi", "--n", "4", "--alpha", "0", "--iid", "0.5"]);
    assert!((v["results"]["mutual_information"].as_f64().unwrap() - 4.0).abs() < 1e-12);

    for args in [
        &["mi", "--n", "5", "--alpha", "0.2", "--iid", "0.3"][..],
        &["mi", "--n", "5", "--alpha", "0.05", "--markov", "0.2,0.6"],
    ] {
        let v = json_of(args);
        assert!(v["results"]["residual_direct"].as_f64().unwrap().abs() < 1e-9);
        assert!(
            v["results"]["residual_decomposition"]
                .as_f64()
                .unwrap()
                .abs()
                < 1e-9
        );
    }
}

#[test]
fn ba_examples_and_trace() {
    let v = json_of(&["ba", "--n", "1", "--alpha", "0.05"]);
    assert!((v["results"]["capacity"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let v = json_of(&["ba", "--n", "2", "--alpha", "0"]);
    assert!((v["results"]["capacity"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let v = json_of(&["ba", "--n", "5", "--alpha", "0.1"]);
    let trace: Vec<f64> = v["results"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(trace.len() > 1);
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    assert_eq!(v["results"]["status"], "converged");
}

#[test]
fn guard_violations_exit_three() {
    let r = syncap(&["ba", "--n", "9", "--alpha", "0.1"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("SYNCAP_GUARD_N"));
    assert_eq!(syncap(&["mi", "--n", "9", "--alpha", "0.1"]).code, 3);

    let lowered = syncap_env(
        &["mi", "--n", "4", "--alpha", "0.1"],
        &[("SYNCAP_GUARD_N", "3")],
    );
    assert_eq!(lowered.code, 3);
    let raised = syncap_env(
        &["law", "--x", "01", "--alpha", "0.1"],
        &[("SYNCAP_GUARD_N", "10")],
    );
    assert_eq!(raised.code, 0);

    let budget = syncap(&["mc", "--n", "100000000", "--trials", "100"]);
    assert_eq!(budget.code, 3);
}

#[test]
fn non_convergence_exits_two_with_report() {
    let r = syncap(&[
        "ba",
        "--n",
        "6",
        "--alpha",
        "0.1",
        "--max-iter",
        "2",
        "--json",
    ]);
    assert_eq!(r.code, 2);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["results"]["status"], "not_converged");
    assert_eq!(v["results"]["iterations"], 2);
}

#[test]
fn json_output_is_deterministic() {
    let args = [
        "mc",
        "--estimator",
        "ab",
        "--alpha",
        "0.1",
        "--n",
        "20000",
        "--trials",
        "6",
        "--seed",
        "9",
    ];
    let a = without_meta(json_of(&args));
    let b = without_meta(json_of(&args));
    assert_eq!(a.to_string(), b.to_string());
    assert_eq!(a["results"]["status"], "pass");
    assert_eq!(a["seed"], 9);

    let c = without_meta(json_of(&["series", "--alpha", "0.001,0.01"]));
    let d = without_meta(json_of(&["series", "--alpha", "0.001,0.01"]));
    assert_eq!(c.to_string(), d.to_string());
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# test\nn = 3\nalpha = 0.2\nmax_iter = 500\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let v = json_of(&["ba", "--config", cfg]);
    assert_eq!(v["params"]["n"], 3);
    assert_eq!(v["params"]["alpha"], 0.2);
    assert_eq!(v["params"]["max_iter"], 500);

    let v = json_of(&["ba", "--config", cfg, "--n", "2"]);
    assert_eq!(v["params"]["n"], 2);

    fs::write(dir.path().join("bad.cfg"), "alhpa = 0.1\n").unwrap();
    let bad = dir.path().join("bad.cfg");
    assert_eq!(syncap(&["ba", "--config", bad.to_str().unwrap()]).code, 1);
}

#[test]
fn ba_running_min_over_persisted_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut mins = Vec::new();
    for n in ["1", "3", "2"] {
        let v = json_of(&["ba", "--n", n, "--alpha", "0.1", "--out", out]);
        mins.push(v["meta"]["context"]["min_upper"].as_f64().unwrap());
    }
    json_of(&["ba", "--n", "4", "--alpha", "0.2", "--out", out]);
    let recs = records(dir.path());
    assert_eq!(recs.len(), 4);
    let c3 = recs[1]["results"]["upper_bound"].as_f64().unwrap();
    assert!((mins[0] - 1.0).abs() < 1e-12);
    assert_eq!(mins[1], c3);
    // n = 2 gives a larger bound than n = 3 at this alpha
    assert_eq!(mins[2], c3);
    assert_eq!(recs[3]["meta"]["context"]["runs"], 1);
}

#[test]
fn replay_reproduces_every_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let runs = [
        &["series", "--L", "50", "--alpha", "0.01"][..],
        &["law", "--x", "0110", "--alpha", "0.2"],
        &["mi", "--n", "4", "--alpha", "0.1", "--markov", "0.3,0.4"],
        &["ba", "--n", "4", "--alpha", "0.05"],
        &[
            "mc",
            "--estimator",
            "zv",
            "--alpha",
            "0.02",
            "--n",
            "10000",
            "--trials",
            "4",
            "--seed",
            "5",
        ],
    ];
    for args in runs {
        let mut a = args.to_vec();
        a.extend(["--out", out]);
        assert_eq!(syncap(&a).code, 0);
    }
    let file = dir.path().join("runs.jsonl");
    let file = file.to_str().unwrap();
    for line in 1..=runs.len() {
        let r = syncap(&["replay", "--record", file, "--line", &line.to_string()]);
        assert_eq!(r.code, 0, "line {line}: {}", r.stderr);
        assert!(r.stdout.contains("identical"));
    }
    assert_eq!(
        syncap(&["replay", "--record", file, "--line", "99"]).code,
        1
    );
}

#[test]
fn tampered_record_is_a_replay_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        syncap(&["mi", "--n", "3", "--alpha", "0.1", "--out", out]).code,
        0
    );
    let mut rec = records(dir.path()).remove(0);
    rec["results"]["mutual_information"] = Value::from(0.5);
    let file = dir.path().join("tampered.jsonl");
    fs::write(&file, rec.to_string() + "\n").unwrap();
    let r = syncap(&["replay", "--record", file.to_str().unwrap()]);
    assert_eq!(r.code, 4);
    assert!(r.stderr.contains("mismatch"));
}

#[test]
fn sweep_writes_versioned_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "sweep",
        "--alpha",
        "0.001,0.005,0.01",
        "--n",
        "1,2,3,4,5,6",
        "--trials",
        "3",
        "--mc-n",
        "20000",
        "--seed",
        "4",
        "--out",
        out,
    ];
    let r = syncap(&args);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv1 = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let json1 = fs::read_to_string(dir.path().join("sweep.json")).unwrap();

    let mut lines = csv1.lines();
    assert_eq!(lines.next(), Some("# syncap-csv v1"));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in [
        "alpha",
        "expansion",
        "tail",
        "C_min_upper",
        "rate_iid_n6",
        "mc_status",
    ] {
        assert!(header.contains(&col), "missing {col}");
    }
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for row in &rows {
        assert_eq!(row[col("mc_status")], "pass");
        let expansion: f64 = row[col("expansion")].parse().unwrap();
        let upper: f64 = row[col("C_min_upper")].parse().unwrap();
        let rate: f64 = row[col("rate_iid_n6")].parse().unwrap();
        assert!(rate <= upper + 1e-9);
        assert!(expansion <= upper + 0.005);
    }

    let doc: Value = serde_json::from_str(&json1).unwrap();
    assert_eq!(doc["schema"], "syncap-csv v1");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);

    // rerun into the same directory: byte-identical artifacts
    assert_eq!(syncap(&args).code, 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("sweep.csv")).unwrap(),
        csv1
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("sweep.json")).unwrap(),
        json1
    );

    let file = dir.path().join("runs.jsonl");
    let r = syncap(&["replay", "--record", file.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn sweep_records_cell_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let r = syncap(&[
        "sweep",
        "--alpha",
        "0.1,0.2",
        "--n",
        "5",
        "--max-iter",
        "1",
        "--out",
        out,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let data: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(data.len(), 2);
    assert!(data.iter().all(|l| l.contains("ba n=5")));
    assert!(data.iter().all(|l| l.contains("skipped")));
}
