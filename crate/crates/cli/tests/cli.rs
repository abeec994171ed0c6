//! Golden-file and exit-code tests for the binary.
//!
//! Golden files hold the stable header lines and the first rows of each
//! output. Regenerate them with `UPDATE_GOLDEN=1 cargo test -p lqreturn-cli`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GOLDEN_ROWS: usize = 3;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn model(name: &str) -> String {
    root().join("models").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqreturn")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Header lines that do not depend on the invocation, then the first rows.
fn stable_prefix(text: &str) -> String {
    let mut out = Vec::new();
    let mut rows = 0;
    for line in text.lines() {
        if line.starts_with("# command:") || line.starts_with("# wall_time_s:") {
            continue;
        }
        if !line.starts_with('#') {
            if rows > GOLDEN_ROWS {
                break;
            }
            rows += 1;
        }
        out.push(line);
    }
    out.join("\n") + "\n"
}

fn golden(name: &str, args: &[&str]) {
    let got = stable_prefix(&stdout(args));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.csv"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(got, want, "golden mismatch for {name}");
}

fn header_value<'a>(text: &'a str, key: &str) -> &'a str {
    let prefix = format!("# {key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("no {key} in header"))
}

fn body_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn golden_outputs() {
    for (tag, file) in [("bernoulli", "bernoulli_23.json"), ("markov", "markov_02_06.json")] {
        let m = model(file);
        golden(&format!("{tag}_spectrum"), &["spectrum", "--model", &m]);
        golden(&format!("{tag}_exact"), &["exact", "--model", &m, "--n-max", "4"]);
        golden(&format!("{tag}_rate"), &["rate", "--model", &m, "--points", "21"]);
        golden(
            &format!("{tag}_simulate"),
            &["simulate", "--model", &m, "--n", "4", "--replicas", "2000", "--seed", "3"],
        );
        golden(&format!("{tag}_verify"), &["verify", "--model", &m]);
    }
    golden("gamma_check", &["gamma-check"]);
}

#[test]
fn spectrum_headers_match_known_values() {
    let b = stdout(&["spectrum", "--model", &model("bernoulli_23.json")]);
    let q: f64 = header_value(&b, "q_star").parse().unwrap();
    assert!((q + 0.672814).abs() < 1e-4);
    let m = stdout(&["spectrum", "--model", &model("markov_02_06.json")]);
    let g: f64 = header_value(&m, "gamma_plus").parse().unwrap();
    assert!((g - 0.6f64.ln()).abs() < 1e-12);
}

#[test]
fn uniform_model_has_identical_r_and_w() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("uniform.json");
    std::fs::write(&path, r#"{"alphabet_size":3,"memory":0,"kind":"transition","weights":[0.3333333333333333,0.3333333333333333,0.3333333333333334]}"#).unwrap();
    let out = stdout(&["spectrum", "--model", path.to_str().unwrap(), "--points", "41"]);
    assert_eq!(header_value(&out, "degenerate"), "true");
    for row in body_rows(&out) {
        assert_eq!(row[3], row[4]);
    }
}

#[test]
fn exact_q_zero_is_zero_and_lambda_approaches_gamma() {
    let out = stdout(&["exact", "--model", &model("markov_02_06.json"), "--n-max", "10", "--q", "0"]);
    let rows = body_rows(&out);
    assert_eq!(rows.len(), 10);
    let gaps: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    for r in &rows {
        assert_eq!(r[2], "0.0");
    }
    assert!(gaps[9] < gaps[3]);
}

#[test]
fn rate_has_zero_row_at_entropy() {
    let out = stdout(&["rate", "--model", &model("bernoulli_23.json")]);
    let h = header_value(&out, "entropy").to_string();
    let row = body_rows(&out).into_iter().find(|r| r[0] == h).expect("row at u = h");
    assert_eq!(row[1], "0.0");
}

#[test]
fn simulate_is_reproducible_and_reports_censoring() {
    let m = model("bernoulli_23.json");
    let args = ["simulate", "--model", &m, "--n", "5", "--replicas", "500", "--seed", "11", "--mode", "hitting"];
    let a = stdout(&args);
    let b = stdout(&args);
    assert_eq!(body_rows(&a), body_rows(&b));
    assert!(a.lines().any(|l| l == "quantile,value,affected_by_censoring,censoring_fraction"));
    let other = stdout(&["simulate", "--model", &m, "--n", "5", "--replicas", "500", "--seed", "12", "--mode", "hitting"]);
    assert_ne!(body_rows(&a), body_rows(&other));
}

#[test]
fn explaw_and_raw_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    let m = model("markov_02_06.json");
    let out = stdout(&["simulate", "--model", &m, "--n", "6", "--replicas", "300", "--mode", "explaw"]);
    assert!(out.lines().any(|l| l == "t,empirical,predicted"));
    assert_eq!(header_value(&out, "word"), "011111");
    stdout(&["simulate", "--model", &m, "--n", "3", "--replicas", "50", "--raw", raw.to_str().unwrap()]);
    let raw = std::fs::read_to_string(raw).unwrap();
    assert_eq!(raw.lines().count(), 51);
}

#[test]
fn out_flag_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let svg = dir.path().join("s.svg");
    let out = run(&[
        "spectrum",
        "--model",
        &model("bernoulli_23.json"),
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success() && out.stdout.is_empty());
    assert!(std::fs::read_to_string(csv).unwrap().contains("q,M,H,R,W,branch_label"));
    assert!(std::fs::read_to_string(svg).unwrap().contains("id=\"q_star\""));
}

#[test]
fn dump_model_echoes_the_spec() {
    let m = model("markov_02_06.json");
    let out = stdout(&["spectrum", "--model", &m, "--dump-model"]);
    let file = std::fs::read_to_string(&m).unwrap();
    assert_eq!(out.trim(), file.trim());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alphabet_size":2,"memory":0,"kind":"transition","weights":[0.5,0.6]}"#).unwrap();
    let bad = bad.to_str().unwrap();
    let m = model("bernoulli_23.json");
    assert_eq!(run(&["spectrum", "--model", bad]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--model", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--model", &m, "--threads", "0"]).status.code(), Some(2));
    assert_eq!(run(&["exact", "--model", &m, "--n-max", "6", "--budget", "10"]).status.code(), Some(4));
    assert_eq!(run(&["simulate", "--model", &m, "--n", "3", "--mode", "explaw", "--word", "012"]).status.code(), Some(2));
    // too few uncensored returns to compare with the exponential law
    let code = run(&["simulate", "--model", &m, "--n", "12", "--replicas", "50", "--t-max", "3", "--mode", "explaw"]).status.code();
    assert_eq!(code, Some(3));
    assert_eq!(run(&["gamma-check", "--s", "0.5", "--x", "1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--model", &m]).status.code(), Some(0));
    assert_eq!(run(&["gamma-check"]).status.code(), Some(0));
}
