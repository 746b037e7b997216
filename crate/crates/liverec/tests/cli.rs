mod common;

use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn liverec(dir: &std::path::Path, args: &[&str]) -> Output {
    Command::new(common::liverec_bin())
        .args(args)
        .env("LIVEREC_WORKDIR", dir)
        .env("LIVEREC_MOCK_ADAPTER", common::mock_adapter())
        .env_remove("LIVEREC_MAX_STEPS")
        .output()
        .unwrap()
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    csv::Reader::from_reader(out.stdout.as_slice())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn probe_prints_recording_json() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::fixture("foo.toml");
    let out = liverec(dir.path(), &["probe", "--language", "mock", fixture.to_str().unwrap()]);
    assert!(out.status.success());
    let rec: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["status"], "completed");
    assert_eq!(rec["return"], "3");
    assert_eq!(rec["snapshots"].as_array().unwrap().len(), 9);
    assert_eq!(rec["snapshots"][0]["variables"][0]["name"], "n");
    assert_eq!(rec["histories"][1]["entries"][3], serde_json::json!({ "value": "3", "line": 4 }));
}

#[test]
fn max_steps_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::fixture("spin.toml");
    let out = Command::new(common::liverec_bin())
        .args(["probe", "--language", "mock", fixture.to_str().unwrap()])
        .env("LIVEREC_WORKDIR", dir.path())
        .env("LIVEREC_MOCK_ADAPTER", common::mock_adapter())
        .env("LIVEREC_MAX_STEPS", "7")
        .output()
        .unwrap();
    let rec: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["status"], "interrupted");
    assert_eq!(rec["snapshots"].as_array().unwrap().len(), 7);
}

#[test]
fn probe_without_annotation_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain.toml");
    std::fs::write(&file, "[[function]]\nname = \"f\"\n").unwrap();
    let out = liverec(dir.path(), &["probe", "--language", "mock", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let result: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["outcome"], "annotation_error");
    let out = liverec(dir.path(), &["probe", "--language", "cobol", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_replay_writes_nineteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("replay.csv");
    let out = liverec(dir.path(), &["bench", "replay", "--language", "mock", "--out", csv_path.to_str().unwrap()]);
    assert!(out.status.success());
    let rows: Vec<Vec<String>> = csv::Reader::from_path(&csv_path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 19);
    assert_eq!(rows[15][3..5], ["80", "interrupted"]);
    assert!(rows.iter().all(|r| r[2].parse::<u64>().is_ok()));
}

#[test]
fn bench_replay_single_step_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("one.toml");
    let foo = common::read_fixture("foo.toml");
    std::fs::write(
        &scenario,
        format!("name = \"one\"\nlanguage = \"mock\"\n[[step]]\nkind = \"edit_code\"\nsource = '''\n{foo}'''\n"),
    )
    .unwrap();
    let rows = csv_rows(&liverec(dir.path(), &["bench", "replay", "--scenario", scenario.to_str().unwrap()]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][4], "completed");
    assert_eq!(rows[0][5], "3");
}

#[test]
fn bench_steps_compile_latency() {
    let dir = tempfile::tempdir().unwrap();
    let steps = csv_rows(&liverec(dir.path(), &["bench", "steps", "--language", "mock", "--counts", "0,10,50"]));
    let counts: Vec<(&str, &str)> = steps.iter().map(|r| (r[0].as_str(), r[2].as_str())).collect();
    assert_eq!(counts, [("0", "1"), ("10", "11"), ("50", "51")]);

    let compile = csv_rows(&liverec(dir.path(), &["bench", "compile", "--language", "mock"]));
    let locs: Vec<&str> = compile.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(locs, ["5", "50", "100"]);
    assert!(compile.iter().all(|r| r[1] == "0"));

    let latency = csv_rows(&liverec(
        dir.path(),
        &["bench", "latency", "--language", "mock", "--n", "20", "--pause-ms", "5"],
    ));
    assert_eq!(latency.len(), 20);
}

#[test]
fn backends_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = liverec(dir.path(), &["backends"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let ids: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids, ["mock", "python", "c"]);
    assert!(text.lines().next().unwrap().ends_with("\tavailable"));
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(common::liverec_bin())
        .args(["serve", "--port", "0", "--backend", "mock"])
        .env("LIVEREC_WORKDIR", dir.path())
        .env("LIVEREC_MOCK_ADAPTER", common::mock_adapter())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let result: Value = reqwest::blocking::Client::new()
        .post(format!("{base}/probe"))
        .json(&serde_json::json!({ "language": "mock", "source": common::read_fixture("foo.toml") }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(result["outcome"], "recording");
    assert_eq!(result["recording"]["return"], "3");
}
