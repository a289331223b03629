use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

fn nncwo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nncwo")).args(args).output().unwrap()
}

fn nncwo_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_nncwo"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn simulate(dir: &Path, name: &str, scenario: &str, dim: &str, n: &str, seed: &str) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap();
    let o = nncwo(&["simulate", "--scenario", scenario, "--dim", dim, "--n", n, "--seed", seed, "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    p.to_string()
}

#[test]
fn simulate_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a.csv", "frontdoor", "4", "500", "42");
    let b = simulate(dir.path(), "b.csv", "frontdoor", "4", "500", "42");
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert_eq!(text.lines().next().unwrap(), "X,Z1,Z2,Z3,Z4,Y");
    assert!(text.lines().all(|l| l.split(',').count() == 6));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn simulate_reports_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.csv");
    let o = nncwo(&["simulate", "--scenario", "msbd", "--dim", "1", "--n", "20", "--seed", "9", "--out", p.to_str().unwrap()]);
    assert!(stderr(&o).contains("seed: coefficients=9 sample="));
}

#[test]
fn zero_dim_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    let o = nncwo(&["simulate", "--scenario", "frontdoor", "--dim", "0", "--n", "10", "--out", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--dim"));
    assert!(!p.exists());
}

#[test]
fn unknown_flag_is_rejected() {
    let o = nncwo(&["truth", "--scenario", "msbd", "--dim", "1", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(nncwo(&["--help"]).status.code(), Some(0));
    assert_eq!(nncwo(&["--version"]).status.code(), Some(0));
}

#[test]
fn truth_grid_sizes() {
    let o = nncwo(&["truth", "--scenario", "msbd", "--dim", "1", "--seed", "1"]);
    assert_eq!(json(&o).as_object().unwrap().len(), 4);
    let o = nncwo(&["truth", "--scenario", "frontdoor", "--dim", "1", "--seed", "1"]);
    let v = json(&o);
    assert_eq!(v.as_object().unwrap().len(), 2);
    assert!(v["0"].is_number() && v["1"].is_number());
}

#[test]
fn truth_exact_and_mc_agree() {
    let e = json(&nncwo(&["truth", "--scenario", "frontdoor", "--dim", "1", "--seed", "7"]));
    let m = json(&nncwo(&["truth", "--scenario", "frontdoor", "--dim", "1", "--seed", "7", "--mode", "mc", "--mc-samples", "1000000"]));
    for k in ["0", "1"] {
        let gap = (e[k].as_f64().unwrap() - m[k].as_f64().unwrap()).abs();
        assert!(gap <= 0.005, "{k}: {gap}");
    }
}

#[test]
fn truth_enumeration_bound_is_a_runtime_failure() {
    let o = nncwo(&["truth", "--scenario", "frontdoor", "--dim", "30", "--mode", "exact"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("enumeration bound"));
}

#[test]
fn estimate_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "fd.csv", "frontdoor", "1", "2000", "5");
    let data = fs::read(&p).unwrap();
    let o = nncwo_stdin(&["estimate", "--scenario", "frontdoor", "--data", "-", "--method", "cwo"], &data);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["scenario"], "frontdoor");
    let mu = v["mu"].as_object().unwrap();
    assert_eq!(mu.keys().collect::<Vec<_>>(), vec!["0", "1"]);
    assert!(stderr(&o).contains("seed: estimator=0"));
}

#[test]
fn single_feature_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "fd.csv", "frontdoor", "1", "3000", "8");
    let a = json(&nncwo(&["estimate", "--scenario", "frontdoor", "--data", &p, "--method", "cwo"]));
    let b = json(&nncwo(&["estimate", "--scenario", "frontdoor", "--data", &p, "--method", "nncwo", "--seed", "4"]));
    assert_eq!(a["mu"], b["mu"]);
}

#[test]
fn estimate_runs_the_network() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "s.csv", "surrogate", "2", "600", "3");
    let o = nncwo(&["estimate", "--scenario", "surrogate", "--data", &p, "--hp", r#"{"epochs": 5}"#, "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["backend"], "nncwo");
    assert!(v["mu"]["0"].is_number() && v["mu"]["1"].is_number());
}

#[test]
fn bad_hyperparameters_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "s.csv", "surrogate", "1", "100", "3");
    let o = nncwo(&["estimate", "--scenario", "surrogate", "--data", &p, "--hp", r#"{"epoch": 5}"#]);
    assert_eq!(o.status.code(), Some(1));
    let o = nncwo(&["estimate", "--scenario", "surrogate", "--data", &p, "--clip-eps", "0.7"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_names_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "fd.csv", "frontdoor", "1", "100", "5");
    let o = nncwo(&["estimate", "--scenario", "surrogate", "--data", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`W`"), "{}", stderr(&o));
}

#[test]
fn estimate_names_malformed_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = simulate(dir.path(), "fd.csv", "frontdoor", "1", "50", "5");
    let mut lines: Vec<String> = fs::read_to_string(&p).unwrap().lines().map(String::from).collect();
    lines[7] = "1,0,abc".into();
    fs::write(&p, lines.join("\n")).unwrap();
    let o = nncwo(&["estimate", "--scenario", "frontdoor", "--data", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));
}

#[test]
fn missing_data_file_is_runtime_failure() {
    let o = nncwo(&["estimate", "--scenario", "frontdoor", "--data", "/nonexistent/d.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

fn small_bench(dir: &Path, prefix: &str, extra: &[&str]) -> Output {
    let out = dir.join(prefix);
    let mut args = vec![
        "bench", "--scenario", "frontdoor", "--dims", "1,2", "--sizes", "300,600", "--reps", "2",
        "--methods", "cwo", "--seed", "11", "--out", out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    nncwo(&args)
}

#[test]
fn bench_writes_tables_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_bench(dir.path(), "run", &["--plot"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["run_frontdoor_dim1.svg", "run_frontdoor_dim2.svg", "run_maae.csv", "run_records.csv"]
    );
    let err = stderr(&o);
    assert!(err.contains("seed: frontdoor base=11"));
    assert_eq!(err.lines().filter(|l| l.starts_with("frontdoor dim=")).count(), 4);
    let records = fs::read_to_string(dir.path().join("run_records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn bench_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_bench(dir.path(), "a", &[]);
    small_bench(dir.path(), "b", &["--workers", "2"]);
    for suffix in ["_records.csv", "_maae.csv"] {
        let a = fs::read(dir.path().join(format!("a{suffix}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b{suffix}"))).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn bench_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "scenario": "msbd", "dims": [1], "sizes": [300], "reps": 2, "methods": ["cwo"],
        "truth_mode": "exact", "truth_samples": 1000, "base_seed": 4,
        "hp": {}, "clip_eps": 0.01
    });
    let path = dir.path().join("cfg.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = dir.path().join("c");
    let o = nncwo(&["bench", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let maae = fs::read_to_string(dir.path().join("c_maae.csv")).unwrap();
    assert!(maae.lines().nth(1).unwrap().starts_with("msbd,cwo,1,300,"));
}

#[test]
fn bench_failure_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nowhere").join("run");
    let o = nncwo(&[
        "bench", "--scenario", "frontdoor", "--dims", "1", "--sizes", "300", "--reps", "1", "--methods", "cwo",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    let o = small_bench(dir.path(), "bad", &["--sizes", "600,300"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn help_texts_match_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for sub in ["simulate", "truth", "estimate", "bench"] {
        let o = nncwo(&[sub, "--help"]);
        let text = String::from_utf8(o.stdout).unwrap();
        let path = golden.join(format!("{sub}_help.txt"));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            fs::write(&path, &text).unwrap();
        }
        assert_eq!(text, fs::read_to_string(&path).unwrap(), "{sub} --help changed");
    }
}
