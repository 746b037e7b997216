//! Runs only where Python with debugpy is installed.

mod common;

use std::time::Duration;

use liverec::backend::Backend;
use liverec::bench::Scenario;
use liverec::engine::Engine;
use liverec::schema::RecordingJson;

fn engine(dir: &std::path::Path) -> Option<Engine> {
    let mut env = common::env_in(dir);
    env.request_timeout = Duration::from_secs(30);
    env.stop_timeout = Duration::from_secs(30);
    let backend = Backend::builtin("python").unwrap();
    if !backend.is_available(&env) {
        eprintln!("skipped: debugpy not installed");
        return None;
    }
    Some(Engine::new(backend, env).with_max_steps(80))
}

fn history(rec: &RecordingJson, name: &str) -> Vec<String> {
    rec.histories
        .iter()
        .find(|h| h.name == name)
        .map(|h| h.entries.iter().map(|e| e.value.clone()).collect())
        .unwrap_or_default()
}

#[test]
fn binary_search_target_g() {
    let dir = tempfile::tempdir().unwrap();
    let Some(mut engine) = engine(dir.path()) else { return };
    let scenario = Scenario::builtin("python").unwrap();
    let result = engine.submit(&scenario.steps[18].source);
    let rec = result.recording.unwrap_or_else(|| panic!("{:?}", result.message));
    assert_eq!(rec.status, "completed");
    assert_eq!(rec.return_value.as_deref(), Some("-1"));
    assert_eq!(history(&rec, "left"), ["0", "3", "5", "6"]);
    assert_eq!(history(&rec, "mid"), ["2", "4", "5"]);
    assert_eq!(history(&rec, "value"), ["'c'", "'e'", "'f'"]);
}

#[test]
fn reload_replaces_definition_in_same_session() {
    let dir = tempfile::tempdir().unwrap();
    let Some(mut engine) = engine(dir.path()) else { return };
    let first = engine.submit("def foo(n):\n    i = n\n    return i + 1\n\n#@foo(3)\n").recording.unwrap();
    assert_eq!(first.return_value.as_deref(), Some("4"));
    let generation = engine.session().unwrap().generation();
    let second = engine.submit("def foo(n):\n    i = n\n    return i * 2\n\n#@foo(3)\n").recording.unwrap();
    assert_eq!(second.return_value.as_deref(), Some("6"));
    let input = engine.submit("def foo(n):\n    i = n\n    return i * 2\n\n#@foo(5)\n").recording.unwrap();
    assert_eq!(input.return_value.as_deref(), Some("10"));
    assert_eq!(engine.session().unwrap().generation(), generation);
    let lines: Vec<u32> = second.snapshots.iter().map(|s| s.line).collect();
    // The function breakpoint stops on the `def` line before the body runs.
    assert_eq!(&lines[..3], &[1, 2, 3]);
}

#[test]
fn non_terminating_step_then_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let Some(mut engine) = engine(dir.path()) else { return };
    let scenario = Scenario::builtin("python").unwrap();
    let stuck = engine.submit(&scenario.steps[15].source).recording.unwrap();
    assert_eq!((stuck.status.as_str(), stuck.snapshots.len()), ("interrupted", 80));
    let next = engine.submit(&scenario.steps[16].source).recording.unwrap();
    assert_eq!(next.status, "completed");
    assert_eq!(next.return_value.as_deref(), Some("5"));
}
