use std::process::{Command, Output};

use serde_json::Value;

fn qracah(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qracah")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn reports(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn eval_kraw_at_degree_zero() {
    let o = qracah(&["eval", "kraw", "n=0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1\n");
}

#[test]
fn eval_reports_poles_with_exit_2() {
    // -2y+s-t-v+1 = -2 at y = 1, s = t = v = 1: a pole at j = 1 < x
    let o = qracah(&["eval", "rr_closed", "N=2", "s=1", "t=1", "v=1", "x=2", "y=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("DenominatorPole: q^{-2y+s-t-v+1} hits q^{-2j}"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn eval_inner_product_matches_closed_form() {
    let args = ["N=2", "s=1", "t=0", "v=0", "x=1", "y=2", "p=1/2"];
    let inner = qracah(&[&["eval", "rr_inner"][..], &args].concat());
    let closed = qracah(&[&["eval", "rr_closed"][..], &args].concat());
    assert_eq!(inner.status.code(), Some(0));
    assert_eq!(stdout(&inner), stdout(&closed));
    // a point where the value does not vanish
    let args = ["N=2", "s=1/2", "t=1/2", "x=1", "y=1", "p=1/2"];
    let inner = stdout(&qracah(&[&["eval", "rr_inner"][..], &args].concat()));
    assert_eq!(inner, stdout(&qracah(&[&["eval", "rr_closed"][..], &args].concat())));
    assert_eq!(inner, "43/17\n");
}

#[test]
fn eval_rejects_unknown_functions_and_bad_points() {
    let o = qracah(&["eval", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("InvalidParameter"));
    assert_eq!(qracah(&["eval", "kraw", "n"]).status.code(), Some(2));
    assert_eq!(qracah(&["eval", "kraw", "n=0", "n=1"]).status.code(), Some(2));
    assert_eq!(qracah(&["eval", "kraw", "n=3", "N=2"]).status.code(), Some(2));
}

#[test]
fn eval_float_and_complex_agree_with_exact() {
    let point = ["eval", "asc", "n=2", "x=1", "u=1", "k=1"];
    let exact = stdout(&qracah(&point));
    let (num, den) = exact.trim().split_once('/').unwrap();
    let exact = num.parse::<f64>().unwrap() / den.parse::<f64>().unwrap();
    let f: f64 = stdout(&qracah(&[&point[..], &["--mode", "float"]].concat())).trim().parse().unwrap();
    assert!((f - exact).abs() < 1e-12 * exact.abs());
    let c = stdout(&qracah(&[&point[..], &["--mode", "complex"]].concat()));
    let re: f64 = c.trim().split('+').next().unwrap().parse().unwrap();
    assert!((re - exact).abs() < 1e-12 * exact.abs(), "{c}");
}

#[test]
fn verify_summation_suite_passes_with_exact_zeros() {
    let o = qracah(&["verify", "--suite", "lemma2.1", "--no-timing"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rs = reports(&o);
    assert!(!rs.is_empty());
    for r in &rs {
        assert_eq!(r["pass"], true);
        assert_eq!(r["schema_version"], 1);
        if r["backend"] == "exact" {
            assert_eq!(r["residual"], "0");
        }
    }
    assert!(stderr(&o).contains("0 failed"));
}

#[test]
fn verify_gevp_at_n_3() {
    let o = qracah(&["verify", "--suite", "cor3.6", "--N", "3", "--no-timing"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rs = reports(&o);
    assert!(rs.iter().all(|r| r["params"]["N"] == "3" && r["residual"] == "0"));
    // 2 bases × 3·3·4 triples × 16 points
    assert_eq!(rs.len(), 2 * 36 * 16);
}

#[test]
fn verify_reports_shallow_certificates_as_failures() {
    let o = qracah(&[
        "verify", "--suite", "prop4.4", "--p", "1/2", "--s", "0", "--t", "0", "--v", "0", "--k", "1", "--x-max", "1",
        "--tol", "1e-20", "--tail-tol", "1e-6", "--no-timing",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let rs = reports(&o);
    let failed: Vec<_> = rs.iter().filter(|r| r["pass"] == false).collect();
    assert!(!failed.is_empty());
    for r in failed {
        assert!(r["error_bound"].as_f64().unwrap() > 1e-20 || r["residual"].as_str().unwrap().parse::<f64>().unwrap() > 1e-20);
        assert_eq!(r["backend"], "exact-truncated");
    }
    // never a pass with a bound above the tolerance
    for r in rs.iter().filter(|r| r["pass"] == true) {
        assert!(r["error_bound"].as_f64().unwrap_or(0.0) <= 1e-20);
    }
}

#[test]
fn verify_config_errors_exit_2() {
    let o = qracah(&["verify", "--suite", "lemma9.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("InvalidParameter"));
    let o = qracah(&["verify", "--suite", "star", "--s", "1/3"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(qracah(&["verify", "--suite", "star", "--tol", "-1"]).status.code(), Some(2));
}

#[test]
fn verify_is_deterministic_without_timing() {
    let args = ["verify", "--suite", "prop3.4", "--N", "2", "--N", "1,1", "--no-timing"];
    let a = qracah(&[&args[..], &["--jobs", "3"]].concat());
    let b = qracah(&[&args[..], &["--jobs", "1"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert!(a.stdout == b.stdout, "parallel and serial runs differ");
}

#[test]
fn verify_report_fields_are_in_schema_order() {
    let o = qracah(&["verify", "--suite", "ev3.x", "--p", "1/2", "--N", "1", "--no-timing"]);
    let line = stdout(&o).lines().next().unwrap().to_string();
    let keys = ["schema_version", "suite", "check", "params", "residual", "pass", "backend", "elapsed_ms"];
    let pos: Vec<usize> = keys.iter().map(|k| line.find(&format!("\"{k}\"")).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{line}");
}

#[test]
fn verify_writes_to_a_file() {
    let dir = std::env::temp_dir().join(format!("qracah-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("star.jsonl");
    let o = qracah(&["verify", "--suite", "star", "--p", "1/2", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn table_cardinality_and_row_order() {
    let o = qracah(&["table", "rr_closed", "N=3", "s=1/2", "t=1/2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 16);
    assert!(rows[0].starts_with("0,0,") && rows[1].starts_with("0,1,") && rows[4].starts_with("1,0,"));
}

#[test]
fn table_heights_columns() {
    let o = qracah(&["table", "heights", "M=2"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("y,h_0,h_1,h_2"));
    // h_j = t + Σ_{i≤j} (2y_i − N_i) with N_i = 1, t = 0
    assert!(text.contains("\"0,1\",0,-1,0\n"));
    assert_eq!(text.lines().count(), 5);
    let o = qracah(&["table", "heights", "k=1,2", "t=1/2", "y=0,0;2,1", "--format", "json"]);
    let rows: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    // su11 heights add k_i: 1/2 + (4 + 1) + (2 + 2)
    assert_eq!(rows[1]["h_2"], "19/2");
}

#[test]
fn table_json_and_csv_hold_the_same_values() {
    let csv = stdout(&qracah(&["table", "kraw", "N=2", "s=1", "u=1"]));
    let json = stdout(&qracah(&["table", "kraw", "N=2", "s=1", "u=1", "--format", "json"]));
    let from_json: Vec<String> = json
        .lines()
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            format!("{},{},{}", v["n"].as_str().unwrap(), v["x"].as_str().unwrap(), v["value"].as_str().unwrap())
        })
        .collect();
    assert_eq!(csv.lines().skip(1).collect::<Vec<_>>(), from_json);
}

#[test]
fn table_is_byte_identical_on_rerun() {
    let args = ["table", "coefficients", "N=1,2,1", "j=2", "t=1/2", "v=1"];
    let a = qracah(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, qracah(&args).stdout);
    // 3^2 shift vectors at each of the 2·3·2 grid points
    assert_eq!(stdout(&a).lines().count(), 1 + 9 * 12);
}
