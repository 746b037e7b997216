//! A scripted debug session over one adapter process.
//!
//! The session launches the adapter, walks it through the configuration
//! handshake until the keep-alive agent is parked on its breakpoint, and
//! then offers blocking request/response calls. A reader thread decodes the
//! adapter's output into a channel; [`Session::wait_for`] consumes it,
//! answers reverse requests inline and buffers everything it was not asked
//! for.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{self, File};
use std::io::{Read, Write};
use std::net::TcpStream;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use liverec_core::recorder::{
    DebuggerError, Evaluation, FrameInfo, Patience, ProbeDebugger, ScopeInfo,
};
use liverec_core::wire::{encode, DapMessage, FrameDecoder, MessageKind, SeqCounter, WireError};
use liverec_core::Variable;
use serde_json::{json, Value};

const BRIEF_WAIT: Duration = Duration::from_millis(250);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IoMode {
    Stdio,
    /// The adapter listens on this address once started.
    Socket { host: String, port: u16 },
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub adapter_command: Vec<String>,
    pub initialize_args: Value,
    pub launch_args: Value,
    /// The keep-alive agent; its breakpoint is set in this file.
    pub runner_path: PathBuf,
    pub runner_line: u32,
    pub env: BTreeMap<String, String>,
    pub io_mode: IoMode,
    /// Adapter working directory; debuggee output goes to `tmp/` below it.
    pub workdir: PathBuf,
    pub request_timeout: Duration,
    pub stop_timeout: Duration,
}

impl SessionConfig {
    pub fn new(adapter_command: Vec<String>, runner_path: PathBuf, runner_line: u32, workdir: PathBuf) -> Self {
        Self {
            adapter_command,
            initialize_args: json!({
                "clientID": "liverec",
                "adapterID": "liverec",
                "pathFormat": "path",
                "linesStartAt1": true,
                "columnsStartAt1": true,
                "supportsRunInTerminalRequest": true,
            }),
            launch_args: json!({ "program": runner_path }),
            runner_path,
            runner_line,
            env: BTreeMap::new(),
            io_mode: IoMode::Stdio,
            workdir,
            request_timeout: Duration::from_secs(10),
            stop_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("could not launch adapter: {0}")]
    Launch(String),
    #[error("Debuggee terminated")]
    DebuggeeTerminated,
    #[error("session is closed")]
    SessionClosed,
    #[error("timed out waiting for {0}")]
    Timeout(String),
    #[error("protocol error: {0}")]
    Protocol(#[from] WireError),
    #[error("{command} failed: {message}")]
    Request { command: String, message: String },
    #[error("session is already launched")]
    AlreadyLaunched,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DebuggerError for SessionError {
    fn is_terminated(&self) -> bool {
        matches!(
            self,
            SessionError::DebuggeeTerminated
                | SessionError::SessionClosed
                | SessionError::Protocol(_)
                | SessionError::Io(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionStatus {
    Launching,
    Idle,
    Running,
    Dead,
}

/// What [`Session::wait_for`] is waiting for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    pub kind: MessageKind,
    /// Event name for events, command for requests and responses.
    pub name: Option<String>,
}

impl Selector {
    pub fn event(name: &str) -> Self {
        Self {
            kind: MessageKind::Event,
            name: Some(name.to_string()),
        }
    }

    pub fn response(command: &str) -> Self {
        Self {
            kind: MessageKind::Response,
            name: Some(command.to_string()),
        }
    }

    pub fn matches(&self, msg: &DapMessage) -> bool {
        if msg.kind() != self.kind {
            return false;
        }
        let name = match msg {
            DapMessage::Event { event, .. } => event.as_str(),
            DapMessage::Request { command, .. } | DapMessage::Response { command, .. } => command.as_str(),
        };
        self.name.as_deref().is_none_or(|n| n == name)
    }

    fn describe(&self) -> String {
        match &self.name {
            Some(n) => format!("{} {n}", self.kind.as_str()),
            None => self.kind.as_str().to_string(),
        }
    }
}

enum Incoming {
    Message(DapMessage),
    Error(WireError),
    Closed,
}

struct Link {
    adapter: Child,
    writer: Box<dyn Write + Send>,
    rx: Receiver<Incoming>,
}

pub struct Session {
    config: SessionConfig,
    link: Option<Link>,
    debuggee: Option<Child>,
    seq: SeqCounter,
    buffer: VecDeque<DapMessage>,
    status: SessionStatus,
    thread_id: i64,
    generation: u64,
    sent: Vec<(u64, String)>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Self {
        Self {
            config,
            link: None,
            debuggee: None,
            seq: SeqCounter::new(),
            buffer: VecDeque::new(),
            status: SessionStatus::Dead,
            thread_id: 1,
            generation: 0,
            sent: Vec::new(),
        }
    }

    /// Creates and launches a session.
    pub fn launch_with(config: SessionConfig) -> Result<Self, SessionError> {
        let mut session = Self::new(config);
        session.launch()?;
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    /// Incremented on every launch; code loaded into an older generation is gone.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn thread_id(&self) -> i64 {
        self.thread_id
    }

    pub fn has_debuggee(&self) -> bool {
        self.debuggee.is_some()
    }

    /// `(seq, command)` of every request sent since the last launch.
    pub fn sent_requests(&self) -> &[(u64, String)] {
        &self.sent
    }

    /// Removes and returns every buffered message.
    pub fn take_buffered(&mut self) -> Vec<DapMessage> {
        self.buffer.drain(..).collect()
    }

    /// Spawns the adapter and brings the agent to its idle breakpoint.
    pub fn launch(&mut self) -> Result<(), SessionError> {
        if self.link.is_some() && self.status != SessionStatus::Dead {
            return Err(SessionError::AlreadyLaunched);
        }
        self.shutdown();
        self.generation += 1;
        self.seq = SeqCounter::new();
        self.sent.clear();
        self.buffer.clear();
        self.thread_id = 1;
        self.status = SessionStatus::Launching;
        let result = self.spawn().and_then(|()| self.handshake());
        if result.is_err() {
            self.shutdown();
        }
        result
    }

    /// Kills the adapter (and debuggee) and launches afresh.
    pub fn restart(&mut self) -> Result<(), SessionError> {
        self.shutdown();
        self.launch()
    }

    fn spawn(&mut self) -> Result<(), SessionError> {
        let cfg = &self.config;
        let Some((program, args)) = cfg.adapter_command.split_first() else {
            return Err(SessionError::Launch("empty adapter command".into()));
        };
        let tmp = cfg.workdir.join("tmp");
        fs::create_dir_all(&tmp).map_err(|e| SessionError::Launch(format!("{}: {e}", tmp.display())))?;
        let stderr = File::create(tmp.join("adapter-stderr.txt"))?;
        let mut command = Command::new(program);
        command
            .args(args)
            .envs(&cfg.env)
            .current_dir(&cfg.workdir)
            .stderr(stderr)
            .process_group(0);
        match &cfg.io_mode {
            IoMode::Stdio => {
                command.stdin(Stdio::piped()).stdout(Stdio::piped());
            }
            IoMode::Socket { .. } => {
                command.stdin(Stdio::null()).stdout(Stdio::null());
            }
        }
        let mut adapter = command
            .spawn()
            .map_err(|e| SessionError::Launch(format!("{program}: {e}")))?;
        let (reader, writer): (Box<dyn Read + Send>, Box<dyn Write + Send>) = match &cfg.io_mode {
            IoMode::Stdio => (
                Box::new(adapter.stdout.take().expect("piped stdout")),
                Box::new(adapter.stdin.take().expect("piped stdin")),
            ),
            IoMode::Socket { host, port } => {
                let stream = match connect(host, *port, cfg.request_timeout, &mut adapter) {
                    Ok(s) => s,
                    Err(e) => {
                        kill(&mut adapter);
                        return Err(e);
                    }
                };
                (Box::new(stream.try_clone()?), Box::new(stream))
            }
        };
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("dap-reader".into())
            .spawn(move || read_loop(reader, tx))?;
        self.link = Some(Link { adapter, writer, rx });
        Ok(())
    }

    fn handshake(&mut self) -> Result<(), SessionError> {
        let initialize_args = self.config.initialize_args.clone();
        self.request("initialize", Some(initialize_args))?;
        let launch_args = self.config.launch_args.clone();
        self.send("launch", Some(launch_args))?;
        self.wait_for(&Selector::event("initialized"), self.config.request_timeout)?;
        let runner = self.config.runner_path.clone();
        self.set_breakpoints(&runner, &[self.config.runner_line])?;
        self.configuration_done()?;
        let launched = self.wait_for(&Selector::response("launch"), self.config.request_timeout)?;
        if !launched.is_success() {
            return Err(SessionError::Launch(failure_message(&launched)));
        }
        self.wait_stop(self.config.stop_timeout)?;
        Ok(())
    }

    /// Ends the session: asks the adapter to disconnect, then kills it and
    /// any debuggee it made us start.
    pub fn shutdown(&mut self) {
        if self.link.is_some() && self.status != SessionStatus::Dead {
            if self
                .send("disconnect", Some(json!({ "terminateDebuggee": true })))
                .is_ok()
            {
                let _ = self.wait_for(&Selector::response("disconnect"), Duration::from_millis(500));
            }
        }
        if let Some(mut link) = self.link.take() {
            kill(&mut link.adapter);
        }
        if let Some(mut debuggee) = self.debuggee.take() {
            let _ = debuggee.kill();
            let _ = debuggee.wait();
        }
        self.status = SessionStatus::Dead;
    }

    /// Sends a request without waiting for anything. Returns its seq.
    pub fn send(&mut self, command: &str, arguments: Option<Value>) -> Result<u64, SessionError> {
        if self.status == SessionStatus::Dead {
            return Err(SessionError::SessionClosed);
        }
        let seq = self.seq.next_seq();
        let msg = DapMessage::request(seq, command, arguments);
        self.write(&msg)?;
        self.sent.push((seq, command.to_string()));
        Ok(seq)
    }

    fn write(&mut self, msg: &DapMessage) -> Result<(), SessionError> {
        let Some(link) = self.link.as_mut() else {
            return Err(SessionError::SessionClosed);
        };
        let frame = encode(msg)?;
        let written = link.writer.write_all(&frame).and_then(|()| link.writer.flush());
        if let Err(e) = written {
            self.status = SessionStatus::Dead;
            return Err(SessionError::Io(e));
        }
        Ok(())
    }

    /// Sends a request and waits for its response, which must succeed.
    pub fn request(&mut self, command: &str, arguments: Option<Value>) -> Result<DapMessage, SessionError> {
        let response = self.request_any(command, arguments)?;
        if response.is_success() {
            Ok(response)
        } else {
            Err(SessionError::Request {
                command: command.to_string(),
                message: failure_message(&response),
            })
        }
    }

    /// Sends a request and returns its response whatever its success flag.
    pub fn request_any(&mut self, command: &str, arguments: Option<Value>) -> Result<DapMessage, SessionError> {
        if self.status == SessionStatus::Dead {
            return Err(SessionError::SessionClosed);
        }
        self.send(command, arguments)?;
        self.wait_for(&Selector::response(command), self.config.request_timeout)
    }

    /// Reads messages until one matches `selector`.
    ///
    /// Buffered messages are looked at first. Reverse requests are handled
    /// inline, other messages are buffered. A `terminated` event ends the
    /// wait with [`SessionError::DebuggeeTerminated`] unless it was asked for.
    pub fn wait_for(&mut self, selector: &Selector, timeout: Duration) -> Result<DapMessage, SessionError> {
        if let Some(i) = self.buffer.iter().position(|m| selector.matches(m)) {
            return Ok(self.buffer.remove(i).expect("index in range"));
        }
        let deadline = Instant::now() + timeout;
        loop {
            if self.status == SessionStatus::Dead {
                return Err(SessionError::SessionClosed);
            }
            let Some(link) = self.link.as_ref() else {
                return Err(SessionError::SessionClosed);
            };
            let remaining = deadline.saturating_duration_since(Instant::now());
            let incoming = match link.rx.recv_timeout(remaining) {
                Ok(incoming) => incoming,
                Err(RecvTimeoutError::Timeout) => return Err(SessionError::Timeout(selector.describe())),
                Err(RecvTimeoutError::Disconnected) => Incoming::Closed,
            };
            let msg = match incoming {
                Incoming::Message(msg) => msg,
                Incoming::Error(e) => {
                    self.status = SessionStatus::Dead;
                    return Err(SessionError::Protocol(e));
                }
                Incoming::Closed => {
                    self.status = SessionStatus::Dead;
                    return Err(SessionError::DebuggeeTerminated);
                }
            };
            if msg.kind() == MessageKind::Request && selector.kind != MessageKind::Request {
                if self.handle_reverse_request(&msg)? {
                    continue;
                }
                self.buffer.push_back(msg);
                continue;
            }
            if selector.matches(&msg) {
                return Ok(msg);
            }
            if msg.event_name() == Some("terminated") {
                self.status = SessionStatus::Dead;
                self.buffer.push_back(msg);
                return Err(SessionError::DebuggeeTerminated);
            }
            self.buffer.push_back(msg);
        }
    }

    /// Answers an adapter-to-client request. Returns whether it was one we
    /// handle (`runInTerminal`); anything else is declined and left for the
    /// caller.
    pub fn handle_reverse_request(&mut self, msg: &DapMessage) -> Result<bool, SessionError> {
        let DapMessage::Request { seq, command, arguments, .. } = msg else {
            return Ok(false);
        };
        if command != "runInTerminal" {
            let reply = DapMessage::error_response(self.seq.next_seq(), *seq, command.clone(), "not supported");
            self.write(&reply)?;
            return Ok(false);
        }
        if self.debuggee.is_some() {
            let reply = DapMessage::error_response(
                self.seq.next_seq(),
                *seq,
                "runInTerminal",
                "a debuggee is already running in this session",
            );
            let _ = self.write(&reply);
            self.status = SessionStatus::Dead;
            return Ok(true);
        }
        match self.spawn_debuggee(arguments.as_ref()) {
            Ok(child) => {
                let pid = child.id();
                self.debuggee = Some(child);
                let reply = DapMessage::response(
                    self.seq.next_seq(),
                    *seq,
                    "runInTerminal",
                    true,
                    Some(json!({ "shellProcessId": pid })),
                );
                self.write(&reply)?;
            }
            Err(e) => {
                let reply = DapMessage::error_response(self.seq.next_seq(), *seq, "runInTerminal", e.to_string());
                let _ = self.write(&reply);
                self.status = SessionStatus::Dead;
            }
        }
        Ok(true)
    }

    fn spawn_debuggee(&self, arguments: Option<&Value>) -> std::io::Result<Child> {
        let args: Vec<String> = arguments
            .and_then(|a| a.get("args"))
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            .unwrap_or_default();
        let Some((program, rest)) = args.split_first() else {
            return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "runInTerminal without args"));
        };
        let tmp = self.config.workdir.join("tmp");
        fs::create_dir_all(&tmp)?;
        let mut command = Command::new(program);
        command
            .args(rest)
            .stdin(Stdio::null())
            .stdout(File::create(tmp.join("stdout.txt"))?)
            .stderr(File::create(tmp.join("stderr.txt"))?);
        match arguments.and_then(|a| a.get("cwd")).and_then(Value::as_str) {
            Some(cwd) if !cwd.is_empty() => command.current_dir(cwd),
            _ => command.current_dir(&self.config.workdir),
        };
        if let Some(env) = arguments.and_then(|a| a.get("env")).and_then(Value::as_object) {
            for (k, v) in env {
                match v {
                    Value::String(s) => command.env(k, s),
                    Value::Null => command.env_remove(k),
                    other => command.env(k, other.to_string()),
                };
            }
        }
        command.spawn()
    }

    fn wait_stop(&mut self, timeout: Duration) -> Result<DapMessage, SessionError> {
        let stopped = self.wait_for(&Selector::event("stopped"), timeout)?;
        if let Some(id) = stopped.payload().and_then(|b| b.get("threadId")).and_then(Value::as_i64) {
            self.thread_id = id;
        }
        self.status = SessionStatus::Idle;
        Ok(stopped)
    }

    pub fn set_breakpoints(&mut self, path: &Path, lines: &[u32]) -> Result<Vec<bool>, SessionError> {
        let path = path.to_string_lossy();
        let response = self.request(
            "setBreakpoints",
            Some(json!({
                "source": { "name": path, "path": path },
                "lines": lines,
                "breakpoints": lines.iter().map(|l| json!({ "line": l })).collect::<Vec<_>>(),
                "sourceModified": false,
            })),
        )?;
        Ok(verified_flags(&response))
    }

    pub fn set_function_breakpoints(&mut self, names: &[String]) -> Result<Vec<bool>, SessionError> {
        let response = self.request(
            "setFunctionBreakpoints",
            Some(json!({
                "breakpoints": names.iter().map(|n| json!({ "name": n })).collect::<Vec<_>>(),
            })),
        )?;
        Ok(verified_flags(&response))
    }

    pub fn configuration_done(&mut self) -> Result<(), SessionError> {
        self.request("configurationDone", None).map(drop)
    }

    pub fn stack_trace(&mut self) -> Result<Vec<FrameInfo>, SessionError> {
        let thread_id = self.thread_id;
        let response = self.request(
            "stackTrace",
            Some(json!({ "threadId": thread_id, "startFrame": 0 })),
        )?;
        Ok(body_list(&response, "stackFrames")
            .iter()
            .map(|f| FrameInfo {
                id: f.get("id").and_then(Value::as_i64).unwrap_or(0),
                name: f.get("name").and_then(Value::as_str).unwrap_or_default().to_string(),
                line: f.get("line").and_then(Value::as_i64).unwrap_or(0),
                column: f.get("column").and_then(Value::as_i64).unwrap_or(0),
            })
            .collect())
    }

    pub fn scopes(&mut self, frame_id: i64) -> Result<Vec<ScopeInfo>, SessionError> {
        let response = self.request("scopes", Some(json!({ "frameId": frame_id })))?;
        Ok(body_list(&response, "scopes")
            .iter()
            .map(|s| ScopeInfo {
                name: s.get("name").and_then(Value::as_str).unwrap_or_default().to_string(),
                variables_reference: s.get("variablesReference").and_then(Value::as_i64).unwrap_or(0),
            })
            .collect())
    }

    pub fn variables(&mut self, reference: i64) -> Result<Vec<Variable>, SessionError> {
        let response = self.request("variables", Some(json!({ "variablesReference": reference })))?;
        Ok(body_list(&response, "variables")
            .iter()
            .map(|v| {
                Variable::new(
                    v.get("name").and_then(Value::as_str).unwrap_or_default(),
                    v.get("value").and_then(Value::as_str).unwrap_or_default(),
                )
            })
            .collect())
    }

    /// Evaluates `expression` in `frame_id`. A failed evaluation is a normal
    /// result, not an error.
    pub fn evaluate(&mut self, expression: &str, frame_id: i64) -> Result<Evaluation, SessionError> {
        let response = self.request_any(
            "evaluate",
            Some(json!({ "expression": expression, "frameId": frame_id, "context": "repl" })),
        )?;
        let result = response
            .payload()
            .and_then(|b| b.get("result"))
            .and_then(Value::as_str)
            .map(str::to_string);
        let message = match &response {
            DapMessage::Response { message, .. } => message.clone(),
            _ => None,
        };
        Ok(Evaluation {
            success: response.is_success(),
            result,
            message,
        })
    }

    fn resume_with(&mut self, command: &str) -> Result<(), SessionError> {
        let thread_id = self.thread_id;
        self.request(command, Some(json!({ "threadId": thread_id })))?;
        self.status = SessionStatus::Running;
        self.wait_stop(self.config.stop_timeout).map(drop)
    }

    pub fn continue_(&mut self) -> Result<(), SessionError> {
        self.resume_with("continue")
    }

    pub fn step_over(&mut self) -> Result<(), SessionError> {
        self.resume_with("next")
    }

    pub fn step_out(&mut self) -> Result<(), SessionError> {
        self.resume_with("stepOut")
    }
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("adapter", &self.config.adapter_command)
            .field("status", &self.status)
            .field("generation", &self.generation)
            .finish_non_exhaustive()
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl ProbeDebugger for Session {
    type Error = SessionError;

    fn set_function_breakpoints(&mut self, names: &[String]) -> Result<(), SessionError> {
        Session::set_function_breakpoints(self, names).map(drop)
    }

    fn stack_trace(&mut self) -> Result<Vec<FrameInfo>, SessionError> {
        Session::stack_trace(self)
    }

    fn scopes(&mut self, frame_id: i64) -> Result<Vec<ScopeInfo>, SessionError> {
        Session::scopes(self, frame_id)
    }

    fn variables(&mut self, reference: i64) -> Result<Vec<Variable>, SessionError> {
        Session::variables(self, reference)
    }

    fn evaluate(&mut self, expression: &str, frame_id: i64) -> Result<Evaluation, SessionError> {
        Session::evaluate(self, expression, frame_id)
    }

    fn resume(&mut self) -> Result<(), SessionError> {
        self.continue_()
    }

    fn step_over(&mut self) -> Result<(), SessionError> {
        Session::step_over(self)
    }

    fn wait_stopped(&mut self, patience: Patience) -> Result<bool, SessionError> {
        let timeout = match patience {
            Patience::Full => self.config.stop_timeout,
            Patience::Brief => BRIEF_WAIT,
        };
        match self.wait_stop(timeout) {
            Ok(_) => Ok(true),
            Err(SessionError::Timeout(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    fn restart(&mut self) -> Result<(), SessionError> {
        Session::restart(self)
    }
}

fn read_loop(mut reader: Box<dyn Read + Send>, tx: mpsc::Sender<Incoming>) {
    let mut decoder = FrameDecoder::new();
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) | Err(_) => {
                let _ = tx.send(Incoming::Closed);
                return;
            }
            Ok(n) => n,
        };
        match decoder.push(&buf[..n]) {
            Ok(messages) => {
                for m in messages {
                    if tx.send(Incoming::Message(m)).is_err() {
                        return;
                    }
                }
            }
            Err(e) => {
                let _ = tx.send(Incoming::Error(e));
                return;
            }
        }
    }
}

fn connect(host: &str, port: u16, timeout: Duration, adapter: &mut Child) -> Result<TcpStream, SessionError> {
    let deadline = Instant::now() + timeout;
    loop {
        match TcpStream::connect((host, port)) {
            Ok(stream) => {
                stream.set_nodelay(true)?;
                return Ok(stream);
            }
            Err(e) => {
                if let Ok(Some(status)) = adapter.try_wait() {
                    return Err(SessionError::Launch(format!("adapter exited with {status}")));
                }
                if Instant::now() >= deadline {
                    return Err(SessionError::Launch(format!("connect {host}:{port}: {e}")));
                }
                thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

fn kill(child: &mut Child) {
    // The adapter leads its own process group; take its helpers down too.
    if let Ok(pid) = i32::try_from(child.id()) {
        // SAFETY: plain syscall on a process group we created.
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
        }
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn failure_message(response: &DapMessage) -> String {
    let message = match response {
        DapMessage::Response { message, .. } => message.clone(),
        _ => None,
    };
    let detail = response
        .payload()
        .and_then(|b| b.pointer("/error/format"))
        .and_then(Value::as_str)
        .map(str::to_string);
    detail.or(message).unwrap_or_else(|| "request failed".to_string())
}

fn body_list<'a>(response: &'a DapMessage, key: &str) -> &'a [Value] {
    response
        .payload()
        .and_then(|b| b.get(key))
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[])
}

fn verified_flags(response: &DapMessage) -> Vec<bool> {
    body_list(response, "breakpoints")
        .iter()
        .map(|b| b.get("verified").and_then(Value::as_bool).unwrap_or(false))
        .collect()
}
