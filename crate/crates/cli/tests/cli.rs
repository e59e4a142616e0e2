use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_kacrice");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn expect_reports_exact_means() {
    let doc = json(&["expect", "-N", "1,10"]);
    let rows = doc["results"].as_array().unwrap();
    assert_eq!(rows[0]["expected"].as_f64().unwrap(), 2.0);
    assert!((rows[1]["expected"].as_f64().unwrap() - 2.0 * 38.5f64.sqrt()).abs() < 1e-12);
    assert_eq!(doc["schema_version"], 1);
    assert!(doc["tool_version"].is_string());
}

#[test]
fn half_interval_halves_the_mean() {
    let full = json(&["expect", "-N", "30"]);
    let half = json(&["expect", "-N", "30", "--interval", "0", "3.141592653589793"]);
    let f = full["results"][0]["expected"].as_f64().unwrap();
    let h = half["results"][0]["expected"].as_f64().unwrap();
    assert!((f - 2.0 * h).abs() < 1e-12);
}

#[test]
fn csv_has_header_and_rows() {
    let out = run(&["variance", "-N", "5,10", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert!(header.contains(&"variance"));
    let col = header.iter().position(|h| *h == "degree").unwrap();
    let degrees: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(col).unwrap()).collect();
    assert_eq!(degrees, ["5", "10"]);
}

#[test]
fn clt_output_carries_records_and_provenance() {
    let doc = json(&["clt", "-N", "12", "--trials", "200", "--seed", "4"]);
    let rec = &doc["results"]["data"][0];
    assert_eq!(rec["degree"], 12);
    assert_eq!(rec["normalized"].as_array().unwrap().len(), 200);
    assert!(rec["ks"]["jittered"]["distance"].as_f64().unwrap() <= 1.0);
    assert!(!doc["references"].as_array().unwrap().is_empty());
    assert_eq!(doc["config"]["seed"], 4);
}

#[test]
fn writes_to_file() {
    let dir = std::env::temp_dir().join(format!("kacrice-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("c0.json");
    let out = run(&["c0", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!((doc["results"]["c"].as_f64().unwrap() - 0.55826).abs() < 2e-4);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn invalid_configurations_exit_with_2() {
    for args in [
        &["clt", "-N", "10", "--trials", "50"][..],
        &["clt-short", "-N", "10", "--gamma", "1.0"],
        &["clt", "-N", "10", "--mollify-m", "N^0.3"],
        &["clt"],
        &["expect", "-N", "10", "--interval", "2", "1"],
        &["var-diff", "-N", "10"],
        &["clt", "--format", "xml", "-N", "3"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unreachable_tolerance_exits_with_3() {
    assert_eq!(run(&["variance", "-N", "20", "--tol", "1e-300"]).status.code(), Some(3));
}

#[test]
fn selftest_passes() {
    let doc = json(&["selftest"]);
    assert_eq!(doc["results"]["passed"], true);
}

#[test]
fn dunnage_runs_are_exploratory() {
    let doc = json(&["clt", "-N", "20", "--trials", "150", "--ensemble", "dunnage"]);
    let rec = &doc["results"]["data"][0];
    assert_eq!(rec["exploratory"], true);
    assert!(rec["analytic_mean"].is_null());
}
