use std::path::PathBuf;
use std::process::{Command, Output};

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name).display().to_string()
}

fn urnlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urnlab")).args(args).env("URNLAB_THREADS", "2").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn validate_reports_the_three_colour_urn() {
    let out = urnlab(&["validate", &example("three_colour.json")]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "S=8 tenability=T_general irreducible\nvalid\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let reducible = write_config(&dir, "reducible.json", r#"{"R": [[2, 0], [1, 1]], "alpha": [1, 1]}"#);
    let out = urnlab(&["validate", &reducible]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("invalid"));
    assert_eq!(code(&urnlab(&["spectrum", &reducible])), 2);

    let untenable = write_config(&dir, "untenable.json", r#"{"R": [[-3, 5], [1, 1]], "alpha": [1, 1]}"#);
    assert_eq!(code(&urnlab(&["validate", &untenable])), 2);

    let unbalanced = write_config(&dir, "unbalanced.json", r#"{"R": [[1, 0], [0, 2]], "alpha": [1, 1]}"#);
    assert_eq!(code(&urnlab(&["validate", &unbalanced])), 2);

    let broken = write_config(&dir, "broken.json", r#"{"R": [[1, 1], [1, 1]"#);
    let out = urnlab(&["validate", &broken]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json:1:"));

    assert_eq!(code(&urnlab(&["validate", "/nonexistent/urn.json"])), 1);
    assert_eq!(code(&urnlab(&["validate"])), 1);
    assert_eq!(code(&urnlab(&["frobnicate"])), 1);
    assert_eq!(code(&urnlab(&["--help"])), 0);
    assert_eq!(code(&urnlab(&["verify", "--help"])), 0);

    let three = example("three_colour.json");
    let missing = urnlab(&["moments", &three, "--eigenvalue", "5"]);
    assert_eq!(code(&missing), 1);
    let small =
        urnlab(&["wsample", &three, "--eigenvalue", "-4", "--steps", "10", "--replicas", "2", "--seed", "1"]);
    assert_eq!(code(&small), 1);
}

#[test]
fn failing_tests_exit_with_three() {
    // at level 0.9 almost every p-value falls below the level
    let args = [
        "verify",
        &example("forest.json"),
        "--suite",
        "forest",
        "--seed",
        "1",
        "--replicas",
        "500",
        "--forest-steps",
        "100",
        "--level",
        "0.9",
    ];
    let out = urnlab(&args);
    assert_eq!(code(&out), 3);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["schema"], "urnlab/1");
    assert!(doc["reports"].as_array().unwrap().iter().any(|r| r["pass"] == false));
}

#[test]
fn spectrum_json() {
    let out = urnlab(&["spectrum", &example("three_colour.json")]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["balance"], 8);
    let classes: Vec<&str> =
        doc["blocks"].as_array().unwrap().iter().map(|b| b["class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["principal", "large", "small"]);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let args = [
        "wsample",
        &example("three_colour.json"),
        "--eigenvalue",
        "6",
        "--steps",
        "200",
        "--replicas",
        "5",
        "--seed",
        "9",
    ];
    let direct = urnlab(&args);
    assert_eq!(code(&direct), 0);
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    let out = urnlab(&with_file);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&direct));
    let text = stdout(&direct);
    assert!(text.starts_with("initial,replica_id,n,re_w,im_w\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 5);
}

#[test]
fn simulate_conserves_balls() {
    let out = urnlab(&[
        "simulate",
        &example("three_colour.json"),
        "--steps",
        "50",
        "--replicas",
        "4",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("replica_id,n,u1,u2,u3"));
    for line in lines {
        let total: i64 = line.split(',').skip(2).map(|x| x.parse::<i64>().unwrap()).sum();
        assert_eq!(total, 7 + 50 * 8);
    }
}

#[test]
fn moments_json_has_both_tables() {
    let out = urnlab(&["moments", &example("three_colour.json"), "--eigenvalue", "6", "--order", "2"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ct = doc["ct"]["e1"]["1,0"][0].as_f64().unwrap();
    assert!((ct - 0.5).abs() < 1e-12);
    assert!(doc["dt"]["e3"]["2,0"].is_array());
}

#[test]
fn fixpoint_density_and_charfn_run() {
    let three = example("three_colour.json");
    let fix = urnlab(&[
        "fixpoint",
        &three,
        "--eigenvalue",
        "6",
        "--pool",
        "3000",
        "--iterations",
        "3",
        "--seed",
        "4",
    ]);
    assert_eq!(code(&fix), 0);
    assert!(stdout(&fix).starts_with("iter,d_e1,d_e2,d_e3,max,noise_floor\n"));

    let common = ["--eigenvalue", "6", "--steps", "300", "--replicas", "400", "--seed", "4"];
    let mut density = vec!["density", three.as_str()];
    density.extend(common);
    density.extend(["--points", "16", "--format", "json"]);
    let out = urnlab(&density);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["columns"], serde_json::json!(["x", "value"]));
    assert_eq!(doc["rows"].as_array().unwrap().len(), 16);

    let mut charfn = vec!["charfn", three.as_str()];
    charfn.extend(common);
    charfn.extend(["--radii", "0.5:5:4", "--radial"]);
    let out = urnlab(&charfn);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 5);
}
