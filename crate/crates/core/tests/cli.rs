use std::process::{Command, Output};

fn recruit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recruit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn repro_matches_golden_files() {
    let o = recruit(&["repro", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), include_str!("golden/repro.csv"));
    let o = recruit(&["repro", "--conditions", "--format", "csv"]);
    assert_eq!(stdout(&o), include_str!("golden/conditions.csv"));
}

#[test]
fn json_output_is_deterministic() {
    let args = ["simulate", "P2", "--trials", "5000", "--seed", "3", "--horizon", "500", "--format", "json"];
    let a = recruit(&args);
    let b = recruit(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["meta"]["seed"], 3);
    assert_eq!(doc["meta"]["tolerances"]["horizon_cap"], 200);
    assert_eq!(doc["results"].as_array().unwrap().len(), 3);
    let keys: Vec<&String> = doc["results"][0].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["outcome", "estimate", "stderr", "trials", "censored"]);
}

#[test]
fn exact_on_p1_without_search() {
    let o = recruit(&["exact", "P1.before", "--format", "json"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let a = &doc["results"][0];
    assert_eq!(a["outcome"], "A");
    let (lo, hi) = (a["lower"].as_f64().unwrap(), a["upper"].as_f64().unwrap());
    assert!(lo <= 0.576 + 1e-12 && 0.576 - 1e-12 <= hi);
    assert!(hi - lo <= 1e-9);
}

#[test]
fn zero_trials_is_a_usage_error() {
    let o = recruit(&["simulate", "P1", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn unknown_verb_prints_usage() {
    let o = recruit(&["bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn bad_values_name_the_key() {
    let o = recruit(&["exact", "P1", "--set", "A.qH=1.2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("A.qH out of [0,1]"));

    let dir = std::env::temp_dir().join(format!("recruit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("only_a.toml");
    std::fs::write(&path, "delta = 0.9\npolicy = \"myopic\"\nmuA = 0.5\nmuB = 0.5\n[A]\np0 = 0.5\nv = 1\nqH = 0.6\nqL = 1\nPbar = 0.9\n").unwrap();
    let o = recruit(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing category B"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validate_reports_instead_of_failing() {
    let o = recruit(&["validate", "P1", "--set", "A.p0=0.95", "--format", "csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("prior not below threshold"));
    let o = recruit(&["validate", "P1", "--format", "csv"]);
    assert_eq!(stdout(&o), "severity,code,message\n");
}

#[test]
fn scenario_files_round_trip_through_the_cli() {
    let dir = std::env::temp_dir().join(format!("recruit-rt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("p3.toml");
    let doc = recruit::scenario_io::serialize_scenario(&recruit::scenario_io::builtin_scenario("P3").unwrap());
    std::fs::write(&path, doc).unwrap();
    let from_file = recruit(&["exact", path.to_str().unwrap(), "--format", "csv"]);
    let builtin = recruit(&["exact", "P3", "--format", "csv"]);
    assert_eq!(from_file.stdout, builtin.stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_rows_follow_the_grid() {
    let o = recruit(&["sweep", "P1", "--vary", "A.qH=0.6,0.9,0.95", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0.6,0.576,"));
    assert!(rows[1].contains(",Backfires,"));
    assert!(rows[3].starts_with("0.95,"));
    assert!(rows[3].contains(",Helps,"));

    let o = recruit(&["sweep", "P1", "--vary", "A.qH=0.1,0.2", "--vary", "B.p0=0.1,0.2", "--cap", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn indices_and_trace_run() {
    let o = recruit(&["indices", "P3", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("B,0,0,0.7,0.7,0.958904109")));
    assert!(out.lines().last().unwrap().starts_with("search,,,,"));
    let o = recruit(&["action-trace", "P4", "--depth", "3", "--format", "csv"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().contains("evaluate 1"));
}
