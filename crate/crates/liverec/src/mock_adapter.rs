//! A debug adapter for mock programs, speaking the wire protocol over any
//! byte stream (the `mock-adapter` binary uses stdio).

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use liverec_core::mock::{
    parse_agent_command, AgentCommand, AgentLayout, DirectCall, MockMachine, MockProgram,
    ResumeMode, RunOutcome, StopReason,
};
use liverec_core::wire::{encode, DapMessage, FrameDecoder, SeqCounter};
use serde_json::{json, Value};

use crate::mockfile::parse_mock_program;

const THREAD_ID: i64 = 1;
const SCOPE_BASE: i64 = 1000;

#[derive(Debug, Clone, Default)]
pub struct AdapterOptions {
    /// Delay before every response.
    pub latency: Duration,
    /// Number of `runInTerminal` requests to send during launch. One is
    /// legitimate; more is a misbehaving adapter.
    pub run_in_terminal: u32,
    /// Statement budget per resume; `None` keeps the machine default.
    pub budget: Option<usize>,
}

pub struct MockAdapter<W: Write> {
    machine: MockMachine,
    options: AdapterOptions,
    out: W,
    seq: SeqCounter,
    runner: Option<PathBuf>,
}

impl<W: Write> MockAdapter<W> {
    pub fn new(program: MockProgram, options: AdapterOptions, out: W) -> Self {
        let mut machine = MockMachine::new(program, AgentLayout::default());
        if let Some(budget) = options.budget {
            machine = machine.with_budget(budget);
        }
        Self {
            machine,
            options,
            out,
            seq: SeqCounter::new(),
            runner: None,
        }
    }

    /// Serves requests until `disconnect` or end of input.
    pub fn serve<R: Read>(&mut self, mut input: R) -> std::io::Result<()> {
        let mut decoder = FrameDecoder::new();
        let mut buf = [0u8; 16 * 1024];
        loop {
            let n = input.read(&mut buf)?;
            if n == 0 {
                return Ok(());
            }
            let messages = decoder
                .push(&buf[..n])
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            for msg in messages {
                if !self.handle(msg)? {
                    return Ok(());
                }
            }
        }
    }

    /// Handles one message. Returns false once the client disconnected.
    pub fn handle(&mut self, msg: DapMessage) -> std::io::Result<bool> {
        let DapMessage::Request { seq, command, arguments, .. } = msg else {
            // Replies to our reverse requests need no action.
            return Ok(true);
        };
        let args = arguments.unwrap_or(Value::Null);
        match command.as_str() {
            "initialize" => {
                self.respond(seq, &command, Ok(Some(capabilities())))?;
            }
            "launch" => {
                if let Some(program) = args.get("program").and_then(Value::as_str) {
                    self.runner = Some(PathBuf::from(program));
                }
                let loaded = match args.get("mockProgram").and_then(Value::as_str) {
                    Some(path) => self.load(Path::new(path)),
                    None => Ok(()),
                };
                for _ in 0..self.options.run_in_terminal {
                    let seq = self.seq.next_seq();
                    self.send(&DapMessage::request(
                        seq,
                        "runInTerminal",
                        Some(json!({
                            "kind": "integrated",
                            "title": "mock debuggee",
                            "args": ["sleep", "300"],
                        })),
                    ))?;
                }
                self.respond(seq, &command, loaded.map(|()| None))?;
                self.event("initialized", None)?;
            }
            "setBreakpoints" => {
                let path = args.pointer("/source/path").and_then(Value::as_str).map(PathBuf::from);
                let lines: Vec<u32> = match args.get("breakpoints").and_then(Value::as_array) {
                    Some(bps) => bps
                        .iter()
                        .filter_map(|b| b.get("line").and_then(Value::as_u64))
                        .map(|l| l as u32)
                        .collect(),
                    None => args
                        .get("lines")
                        .and_then(Value::as_array)
                        .map(|a| a.iter().filter_map(Value::as_u64).map(|l| l as u32).collect())
                        .unwrap_or_default(),
                };
                let verified = if path.is_some() && path == self.runner {
                    self.machine.set_agent_breakpoints(&lines)
                } else {
                    vec![false; lines.len()]
                };
                let body: Vec<Value> = lines
                    .iter()
                    .zip(verified)
                    .map(|(line, ok)| json!({ "verified": ok, "line": line }))
                    .collect();
                self.respond(seq, &command, Ok(Some(json!({ "breakpoints": body }))))?;
            }
            "setFunctionBreakpoints" => {
                let names: Vec<String> = args
                    .get("breakpoints")
                    .and_then(Value::as_array)
                    .map(|a| {
                        a.iter()
                            .filter_map(|b| b.get("name").and_then(Value::as_str).map(str::to_string))
                            .collect()
                    })
                    .unwrap_or_default();
                let verified = self.machine.set_function_breakpoints(&names);
                let body: Vec<Value> = verified.iter().map(|ok| json!({ "verified": ok })).collect();
                self.respond(seq, &command, Ok(Some(json!({ "breakpoints": body }))))?;
            }
            "configurationDone" => {
                self.respond(seq, &command, Ok(None))?;
                let outcome = self.machine.start();
                self.report(outcome)?;
            }
            "threads" => {
                let body = json!({ "threads": [{ "id": THREAD_ID, "name": "main" }] });
                self.respond(seq, &command, Ok(Some(body)))?;
            }
            "stackTrace" => {
                let frames: Vec<Value> = self
                    .machine
                    .frames()
                    .into_iter()
                    .map(|f| {
                        let mut frame = json!({
                            "id": f.id,
                            "name": f.name,
                            "line": f.line,
                            "column": f.column,
                        });
                        if !f.path.is_empty() {
                            let path = match (&self.runner, f.id) {
                                (Some(runner), 1) => runner.to_string_lossy().into_owned(),
                                _ => f.path,
                            };
                            frame["source"] = json!({ "path": path });
                        }
                        frame
                    })
                    .collect();
                let total = frames.len();
                self.respond(
                    seq,
                    &command,
                    Ok(Some(json!({ "stackFrames": frames, "totalFrames": total }))),
                )?;
            }
            "scopes" => {
                let frame = args.get("frameId").and_then(Value::as_i64).unwrap_or(-1);
                let result = match self.machine.locals(frame) {
                    Some(_) => Ok(Some(json!({
                        "scopes": [{
                            "name": "Locals",
                            "variablesReference": SCOPE_BASE + frame,
                            "expensive": false,
                        }]
                    }))),
                    None => Err(format!("no frame with id {frame}")),
                };
                self.respond(seq, &command, result)?;
            }
            "variables" => {
                let reference = args.get("variablesReference").and_then(Value::as_i64).unwrap_or(0);
                let result = match self.machine.locals(reference - SCOPE_BASE) {
                    Some(vars) => {
                        let vars: Vec<Value> = vars
                            .iter()
                            .map(|v| json!({ "name": v.name, "value": v.value, "variablesReference": 0 }))
                            .collect();
                        Ok(Some(json!({ "variables": vars })))
                    }
                    None => Err(format!("no variables with reference {reference}")),
                };
                self.respond(seq, &command, result)?;
            }
            "evaluate" => {
                let expression = args.get("expression").and_then(Value::as_str).unwrap_or_default();
                let frame = args.get("frameId").and_then(Value::as_i64);
                self.evaluate(seq, expression, frame)?;
            }
            "continue" | "next" | "stepOut" => {
                let mode = match command.as_str() {
                    "continue" => ResumeMode::Continue,
                    "next" => ResumeMode::Next,
                    _ => ResumeMode::StepOut,
                };
                let body = (mode == ResumeMode::Continue).then(|| json!({ "allThreadsContinued": true }));
                self.respond(seq, &command, Ok(body))?;
                let outcome = self.machine.resume(mode);
                self.report(outcome)?;
            }
            "disconnect" => {
                self.respond(seq, &command, Ok(None))?;
                return Ok(false);
            }
            _ => {
                self.respond(seq, &command, Err(format!("unsupported request {command:?}")))?;
            }
        }
        Ok(true)
    }

    fn evaluate(&mut self, seq: u64, expression: &str, frame: Option<i64>) -> std::io::Result<()> {
        let value = |text: &str| Ok(Some(json!({ "result": text, "variablesReference": 0 })));
        if let Ok(n) = expression.trim().parse::<i64>() {
            return self.respond(seq, "evaluate", value(&n.to_string()));
        }
        match parse_agent_command(expression) {
            Some(AgentCommand::Load(path)) => {
                let result = self.load(Path::new(&path)).and_then(|()| value("None"));
                self.respond(seq, "evaluate", result)
            }
            Some(AgentCommand::Arm { function, args }) => {
                self.machine.arm(&function, args);
                self.respond(seq, "evaluate", value("None"))
            }
            Some(AgentCommand::Call { function, args })
                if function == "exit" && args.is_empty() && !self.machine.program().defines("exit") =>
            {
                self.respond(seq, "evaluate", value("None"))?;
                self.event("exited", Some(json!({ "exitCode": 0 })))?;
                self.event("terminated", None)
            }
            Some(AgentCommand::Call { function, args }) => match self.machine.call_direct(&function, &args) {
                Ok(DirectCall::Stopped) => {
                    self.respond(seq, "evaluate", value(""))?;
                    self.stopped(StopReason::Breakpoint)
                }
                Ok(DirectCall::Returned(v)) => {
                    self.respond(seq, "evaluate", value(v.as_deref().unwrap_or("void")))
                }
                // The call never finished; like a hung debuggee, say nothing.
                Ok(DirectCall::Running) => Ok(()),
                Err(message) => self.respond(seq, "evaluate", Err(message)),
            },
            Some(AgentCommand::Lookup(name)) => {
                let id = frame.unwrap_or_else(|| self.machine.frames()[0].id);
                let found = self
                    .machine
                    .locals(id)
                    .and_then(|vars| vars.into_iter().find(|v| v.name == name));
                match found {
                    Some(v) => self.respond(seq, "evaluate", value(&v.value)),
                    None => self.respond(seq, "evaluate", Err(format!("name {name:?} is not defined"))),
                }
            }
            None => self.respond(seq, "evaluate", Err(format!("cannot evaluate {expression:?}"))),
        }
    }

    fn load(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let program = parse_mock_program(&text).map_err(|e| e.to_string())?;
        self.machine.load(program).map_err(|e| e.to_string())
    }

    fn report(&mut self, outcome: RunOutcome) -> std::io::Result<()> {
        match outcome {
            RunOutcome::Stopped(reason) => self.stopped(reason),
            RunOutcome::Running => Ok(()),
        }
    }

    fn stopped(&mut self, reason: StopReason) -> std::io::Result<()> {
        self.event(
            "stopped",
            Some(json!({ "reason": reason.as_str(), "threadId": THREAD_ID, "allThreadsStopped": true })),
        )
    }

    fn respond(&mut self, request_seq: u64, command: &str, result: Result<Option<Value>, String>) -> std::io::Result<()> {
        if !self.options.latency.is_zero() {
            thread::sleep(self.options.latency);
        }
        let seq = self.seq.next_seq();
        let msg = match result {
            Ok(body) => DapMessage::response(seq, request_seq, command, true, body),
            Err(message) => DapMessage::error_response(seq, request_seq, command, message),
        };
        self.send(&msg)
    }

    fn event(&mut self, name: &str, body: Option<Value>) -> std::io::Result<()> {
        let seq = self.seq.next_seq();
        self.send(&DapMessage::event(seq, name, body))
    }

    fn send(&mut self, msg: &DapMessage) -> std::io::Result<()> {
        let frame = encode(msg).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        self.out.write_all(&frame)?;
        self.out.flush()
    }
}

fn capabilities() -> Value {
    json!({
        "supportsConfigurationDoneRequest": true,
        "supportsFunctionBreakpoints": true,
        "supportsEvaluateForHovers": false,
        "supportsStepBack": false,
    })
}
