//! Timing harnesses: scenario replay, step scaling, compile/load cost and
//! request roundtrip latency. Each produces rows written as CSV with
//! durations rounded to whole milliseconds.

use std::io::Write;
use std::path::Path;
use std::thread;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use crate::engine::{ms_since, Engine, EngineError};
use crate::schema::{Outcome, ProbeResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    EditCode,
    EditInput,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::EditCode => "edit_code",
            StepKind::EditInput => "edit_input",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioStep {
    pub kind: StepKind,
    #[serde(default)]
    pub note: String,
    pub source: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub language: String,
    #[serde(rename = "step")]
    pub steps: Vec<ScenarioStep>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("reading scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario does not parse: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

const SCENARIOS: &[(&str, &str)] = &[
    ("mock", include_str!("../scenarios/binary_search.mock.toml")),
    ("python", include_str!("../scenarios/binary_search.python.toml")),
    ("c", include_str!("../scenarios/binary_search.c.toml")),
];

impl Scenario {
    /// The shipped binary search scenario for `language`.
    pub fn builtin(language: &str) -> Option<Self> {
        let (_, text) = SCENARIOS.iter().find(|(id, _)| *id == language)?;
        Some(Self::parse(text).expect("shipped scenarios parse"))
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        match scenario.steps.first() {
            None => return Err(ScenarioError::Invalid("no steps".into())),
            Some(first) if first.kind != StepKind::EditCode => {
                return Err(ScenarioError::Invalid("the first step must define the code".into()));
            }
            _ => {}
        }
        if let Some(i) = scenario.steps.windows(2).position(|w| w[0].source == w[1].source) {
            return Err(ScenarioError::Invalid(format!("steps {} and {} have the same source", i + 1, i + 2)));
        }
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub step: usize,
    pub kind: StepKind,
    pub duration_ms: f64,
    pub snapshot_count: usize,
    /// Recording status, or the outcome when no recording was made.
    pub status: String,
    pub return_value: Option<String>,
}

fn status_of(result: &ProbeResult) -> String {
    match (&result.recording, result.outcome) {
        (Some(rec), _) => rec.status.clone(),
        (None, Outcome::CompileError) => "compile_error".into(),
        (None, Outcome::AnnotationError) => "annotation_error".into(),
        (None, _) => "engine_error".into(),
    }
}

/// Submits every step in order through `engine`.
pub fn replay(engine: &mut Engine, scenario: &Scenario) -> Vec<ReplayRow> {
    scenario
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let result = engine.submit(&step.source);
            log::info!("step {}: {}", i + 1, status_of(&result));
            ReplayRow {
                step: i + 1,
                kind: step.kind,
                duration_ms: result.duration_ms,
                snapshot_count: result.recording.as_ref().map_or(0, |r| r.snapshots.len()),
                status: status_of(&result),
                return_value: result.recording.as_ref().and_then(|r| r.return_value.clone()),
            }
        })
        .collect()
}

/// A function executing `k` assignments before returning, with its probe
/// annotation, for the given backend.
pub fn straight_line(language: &str, k: usize) -> Option<String> {
    let mut out = String::new();
    match language {
        "mock" => {
            out.push_str("#@work()\n[[function]]\nname = \"work\"\nsteps = [\n");
            for i in 0..k {
                out.push_str(&format!("  {{ line = {}, set = {{ x = {} }} }},\n", i + 2, i));
            }
            out.push_str(&format!("  {{ line = {}, return = {} }},\n]\n", k + 2, k.saturating_sub(1)));
        }
        "python" => {
            out.push_str("def work():\n");
            for i in 0..k {
                out.push_str(&format!("    x = {i}\n"));
            }
            out.push_str(if k == 0 { "    return 0\n" } else { "    return x\n" });
            out.push_str("\n#@work()\n");
        }
        "c" => {
            out.push_str("int work(void) {\n    int x = 0;\n");
            for i in 0..k.saturating_sub(1) {
                out.push_str(&format!("    x = {};\n", i + 1));
            }
            out.push_str("    return x;\n}\n\n//@work()\n");
        }
        _ => return None,
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepsRow {
    pub steps: usize,
    pub total_ms: f64,
    pub snapshot_count: usize,
    pub status: String,
}

/// Records a straight-line function of each requested size. The session is
/// launched before the first measurement.
pub fn step_scaling(engine: &mut Engine, counts: &[usize]) -> Result<Vec<StepsRow>, EngineError> {
    engine.session()?;
    let language = engine.backend().id().to_string();
    let base = engine.max_steps();
    let mut rows = Vec::with_capacity(counts.len());
    for &k in counts {
        let source = straight_line(&language, k).ok_or_else(|| {
            EngineError::Io(std::io::Error::other(format!("no straight-line generator for {language}")))
        })?;
        engine.set_max_steps(base.max(k + 8));
        let result = engine.submit(&source);
        rows.push(StepsRow {
            steps: k,
            total_ms: result.duration_ms,
            snapshot_count: result.recording.as_ref().map_or(0, |r| r.snapshots.len()),
            status: status_of(&result),
        });
    }
    engine.set_max_steps(base);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileRow {
    pub loc: usize,
    pub compile_ms: f64,
    pub load_ms: f64,
}

/// Synthetic code of `loc` lines for the given backend.
pub fn synthetic_code(language: &str, loc: usize, salt: u64) -> Option<String> {
    let body = loc.saturating_sub(2).max(1);
    let mut out = String::new();
    match language {
        "mock" => {
            out.push_str(&format!("# {salt}\n[[function]]\nname = \"work\"\nsteps = [\n"));
            for i in 0..body {
                out.push_str(&format!("  {{ line = {}, set = {{ x = {i} }} }},\n", i + 2));
            }
            out.push_str("]\n");
        }
        "python" => {
            out.push_str(&format!("def work():  # {salt}\n"));
            for i in 0..body {
                out.push_str(&format!("    x = {i}\n"));
            }
        }
        "c" => {
            out.push_str(&format!("int work(void) {{ /* {salt} */\n    int x = 0;\n"));
            for i in 1..body {
                out.push_str(&format!("    x = {i};\n"));
            }
            out.push_str("    return x;\n}\n");
        }
        _ => return None,
    }
    Some(out)
}

/// Compiles and loads synthetic code of each requested size. Every size
/// uses fresh code so nothing is skipped as already loaded.
pub fn compile_load_scaling(engine: &mut Engine, locs: &[usize]) -> Result<Vec<CompileRow>, EngineError> {
    let language = engine.backend().id().to_string();
    let salt = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos() as u64);
    let mut rows = Vec::with_capacity(locs.len());
    for (i, &loc) in locs.iter().enumerate() {
        let code = synthetic_code(&language, loc, salt.wrapping_add(i as u64)).ok_or_else(|| {
            EngineError::Io(std::io::Error::other(format!("no code generator for {language}")))
        })?;
        let t = engine.prepare_code(&code)?;
        rows.push(CompileRow {
            loc,
            compile_ms: t.compile_ms,
            load_ms: t.load_ms,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRow {
    pub i: usize,
    pub roundtrip_ms: f64,
}

/// Times `n` consecutive `stackTrace` requests while the agent is parked,
/// pausing `pause` between them.
pub fn roundtrip_latency(engine: &mut Engine, n: usize, pause: Duration) -> Result<Vec<LatencyRow>, EngineError> {
    let session = engine.session()?;
    let thread_id = session.thread_id();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && !pause.is_zero() {
            thread::sleep(pause);
        }
        let started = Instant::now();
        session.request("stackTrace", Some(json!({ "threadId": thread_id })))?;
        rows.push(LatencyRow {
            i,
            roundtrip_ms: ms_since(started),
        });
    }
    Ok(rows)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

fn whole_ms(ms: f64) -> String {
    format!("{}", ms.max(0.0).round() as u64)
}

pub fn write_replay_csv<W: Write>(out: W, rows: &[ReplayRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "kind", "duration_ms", "snapshot_count", "status", "return"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.kind.as_str().to_string(),
            whole_ms(r.duration_ms),
            r.snapshot_count.to_string(),
            r.status.clone(),
            r.return_value.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_steps_csv<W: Write>(out: W, rows: &[StepsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["steps", "total_ms", "snapshot_count", "status"])?;
    for r in rows {
        w.write_record([r.steps.to_string(), whole_ms(r.total_ms), r.snapshot_count.to_string(), r.status.clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_compile_csv<W: Write>(out: W, rows: &[CompileRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["loc", "compile_ms", "load_ms"])?;
    for r in rows {
        w.write_record([r.loc.to_string(), whole_ms(r.compile_ms), whole_ms(r.load_ms)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_latency_csv<W: Write>(out: W, rows: &[LatencyRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "roundtrip_ms"])?;
    for r in rows {
        w.write_record([r.i.to_string(), whole_ms(r.roundtrip_ms)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mockfile::parse_mock_program;

    #[test]
    fn straight_line_mock_has_k_plus_one_statements() {
        for k in [0, 1, 10] {
            let p = parse_mock_program(&straight_line("mock", k).unwrap()).unwrap();
            assert_eq!(p.functions[0].steps.len(), k + 1);
        }
    }

    #[test]
    fn synthetic_mock_code_has_requested_lines() {
        for loc in [5, 50, 100] {
            let code = synthetic_code("mock", loc, 7).unwrap();
            let p = parse_mock_program(&code).unwrap();
            assert_eq!(p.functions[0].steps.len(), loc - 2);
        }
    }

    #[test]
    fn shipped_scenarios_have_nineteen_steps() {
        for language in ["mock", "python", "c"] {
            let s = Scenario::builtin(language).unwrap();
            assert_eq!(s.language, language);
            assert_eq!(s.steps.len(), 19);
            let code = s.steps.iter().filter(|st| st.kind == StepKind::EditCode).count();
            assert_eq!((code, 19 - code), (10, 9));
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn scenario_rejects_input_first_and_repeats() {
        let text = "name = \"s\"\nlanguage = \"mock\"\n[[step]]\nkind = \"edit_input\"\nsource = \"a\"\n";
        assert!(matches!(Scenario::parse(text), Err(ScenarioError::Invalid(_))));
        let text = "name = \"s\"\nlanguage = \"mock\"\n[[step]]\nkind = \"edit_code\"\nsource = \"a\"\n[[step]]\nkind = \"edit_input\"\nsource = \"a\"\n";
        assert!(matches!(Scenario::parse(text), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn replay_csv_rounds_durations() {
        let rows = [ReplayRow {
            step: 1,
            kind: StepKind::EditCode,
            duration_ms: 12.6,
            snapshot_count: 3,
            status: "completed".into(),
            return_value: Some("'a,b'".into()),
        }];
        let mut buf = Vec::new();
        write_replay_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,kind,duration_ms,snapshot_count,status,return\n1,edit_code,13,3,completed,\"'a,b'\"\n"
        );
    }
}
