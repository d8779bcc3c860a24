use std::fs;
use std::process::{Command, Output};

fn orthomin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthomin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_body(path: &std::path::Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# orthomin-lab "), "{first}");
    lines.collect::<Vec<_>>().join("\n")
}

#[test]
fn table21_prints_the_table_and_writes_identical_csv_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = orthomin(&["table21", "--out", a.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("3.6056"));
    assert!(stdout.contains("Orthomin(11)"));
    assert!(orthomin(&["table21", "--out", b.to_str().unwrap()]).status.success());
    let body = csv_body(&a);
    assert_eq!(body, csv_body(&b));
    assert!(body.starts_with("k,it,n,residual_norm,q"));
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = orthomin(&["table21", "--iters", "5", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["columns"].as_array().unwrap().len(), 8);
}

#[test]
fn seeded_ellipse_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("e{i}.csv"))).collect();
    for p in &paths {
        let out = orthomin(&[
            "ellipse", "--d", "32", "--k", "1,2", "--iters", "60", "--seed", "7", "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(csv_body(&paths[0]), csv_body(&paths[1]));
}

#[test]
fn haar_exact_prints_pass_lines() {
    let out = orthomin(&["moments", "--mode", "haar-exact", "--rho", "2/5", "--steps", "8"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

#[test]
fn qcheck_passes() {
    let out = orthomin(&["qcheck", "--max-n", "8", "--trials", "20", "--exact"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn scan_reports_verdicts() {
    let out = orthomin(&["scan", "--d", "2,13", "--rho", "0.5", "--k", "1", "--iters", "200"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("constant q_n"));
    assert!(stdout.contains("rate = rho"));
}

#[test]
fn exit_codes() {
    // configuration errors
    assert_eq!(orthomin(&["table21", "--rho", "1.5"]).status.code(), Some(2));
    assert_eq!(orthomin(&["moments", "--mode", "haar-exact", "--rho", "0.4"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"spectrum":{"kind":"ellipse"}}"#).unwrap();
    assert_eq!(orthomin(&["solve", bad.to_str().unwrap()]).status.code(), Some(2));
    let zero_k = dir.path().join("zero_k.json");
    fs::write(
        &zero_k,
        r#"{"spectrum":{"kind":"unit_circle_roots","d":5,"rho":0.5},"k_list":[0],"iters":5}"#,
    )
    .unwrap();
    assert_eq!(orthomin(&["solve", zero_k.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn solve_writes_configured_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("run.json");
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"spectrum":{{"kind":"pde","d":32,"a":0.05,"b":1.0,"c":0.5}},"k_list":[1,2],"iters":40,
               "r0":{{"seeded_random":{{"seed":3}}}},"output":{:?},"format":"json"}}"#,
            out_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = orthomin(&["solve", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    assert!(v["bounds"]["fov_distance"].as_f64().unwrap() > 0.0);
}
