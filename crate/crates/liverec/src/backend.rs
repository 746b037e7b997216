//! Language backends: a manifest per language plus the embedded keep-alive
//! agent it runs.
//!
//! A manifest names everything language specific: how comments start, how
//! to compile, how to hand new code to the agent, who calls the probed
//! function and where its return value shows up. Placeholders in braces are
//! filled in when a session is prepared:
//!
//! | placeholder      | value                                        |
//! |------------------|----------------------------------------------|
//! | `{runner}`       | agent source written to the backend workdir  |
//! | `{agent_bin}`    | agent executable, when the agent is built    |
//! | `{workdir}`      | the backend's working directory              |
//! | `{python}`       | Python interpreter                           |
//! | `{mock_adapter}` | the `mock-adapter` executable                |
//! | `{source}`, `{artifact}`, `{stem}`, `{path}` | compile and load |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use liverec_core::recorder::{CallerMode, ProbeProfile, ReturnRule};
use serde::Deserialize;
use serde_json::Value;

use crate::session::{IoMode, Session, SessionConfig, SessionError};

const MANIFESTS: &[(&str, &str)] = &[
    ("mock", include_str!("../assets/backends/mock.toml")),
    ("python", include_str!("../assets/backends/python.toml")),
    ("c", include_str!("../assets/backends/c.toml")),
];

const AGENTS: &[(&str, &str)] = &[
    ("mock_agent.txt", include_str!("../assets/agents/mock_agent.txt")),
    ("python_agent.py", include_str!("../assets/agents/python_agent.py")),
    ("c_agent.c", include_str!("../assets/agents/c_agent.c")),
];

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("unknown backend {0:?}")]
    Unknown(String),
    #[error("invalid backend manifest: {0}")]
    Manifest(String),
    #[error("preparing {backend}: {message}")]
    Prepare { backend: String, message: String },
}

#[derive(Debug, thiserror::Error)]
#[error("{diagnostics}")]
pub struct CompileError {
    pub diagnostics: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("loading {path} failed: {message}")]
    Rejected { path: String, message: String },
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    id: String,
    comment_marker: String,
    extension: String,
    caller: CallerMode,
    invoke_template: String,
    load_template: String,
    #[serde(default)]
    load_continue: bool,
    reset_cycles: u32,
    #[serde(default = "default_trigger_cycles")]
    trigger_cycles: u32,
    return_rule: ReturnRule,
    #[serde(default)]
    available: Vec<String>,
    compile: Option<CompileSpec>,
    agent: AgentSpec,
    adapter: AdapterSpec,
}

fn default_trigger_cycles() -> u32 {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileSpec {
    pub command: Vec<String>,
    /// Artifact file name; `{stem}` is the source file stem.
    pub artifact: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    /// Name of an embedded agent, or a path to an agent file.
    pub asset: String,
    /// Line of the idle breakpoint.
    pub line: u32,
    /// Command building an executable agent from `{runner}` into `{agent_bin}`.
    pub build: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterSpec {
    pub command: Vec<String>,
    pub initialize: Option<Value>,
    #[serde(default = "Value::default")]
    pub launch: Value,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    /// `host:port` to connect to instead of talking over stdio.
    pub socket: Option<String>,
}

/// Where and with which tools backends run.
#[derive(Debug, Clone)]
pub struct BackendEnv {
    pub workdir: PathBuf,
    pub mock_adapter: PathBuf,
    pub python: String,
    /// Appended to every adapter command line.
    pub adapter_args: Vec<String>,
    pub request_timeout: Duration,
    pub stop_timeout: Duration,
}

impl BackendEnv {
    /// Defaults, overridable through `LIVEREC_MOCK_ADAPTER` and `LIVEREC_PYTHON`.
    pub fn new(workdir: impl Into<PathBuf>) -> Self {
        let mock_adapter = std::env::var_os("LIVEREC_MOCK_ADAPTER")
            .map(PathBuf::from)
            .unwrap_or_else(sibling_mock_adapter);
        Self {
            workdir: workdir.into(),
            mock_adapter,
            python: std::env::var("LIVEREC_PYTHON").unwrap_or_else(|_| "python3".into()),
            adapter_args: Vec::new(),
            request_timeout: Duration::from_secs(10),
            stop_timeout: Duration::from_secs(10),
        }
    }
}

/// `mock-adapter` next to the running executable (or its parent, for test
/// binaries living in `deps/`).
fn sibling_mock_adapter() -> PathBuf {
    let name = format!("mock-adapter{}", std::env::consts::EXE_SUFFIX);
    if let Ok(exe) = std::env::current_exe() {
        for dir in exe.ancestors().skip(1).take(2) {
            let candidate = dir.join(&name);
            if candidate.is_file() {
                return candidate;
            }
        }
    }
    PathBuf::from(name)
}

#[derive(Debug, Clone)]
pub struct Backend {
    manifest: Manifest,
}

impl Backend {
    pub fn builtin(id: &str) -> Result<Self, BackendError> {
        let (_, text) = MANIFESTS
            .iter()
            .find(|(name, _)| *name == id)
            .ok_or_else(|| BackendError::Unknown(id.to_string()))?;
        Self::from_manifest(text)
    }

    pub fn builtin_ids() -> Vec<&'static str> {
        MANIFESTS.iter().map(|(id, _)| *id).collect()
    }

    pub fn from_manifest(text: &str) -> Result<Self, BackendError> {
        let manifest: Manifest = toml::from_str(text).map_err(|e| BackendError::Manifest(e.to_string()))?;
        if manifest.adapter.command.is_empty() {
            return Err(BackendError::Manifest("adapter command is empty".into()));
        }
        let template = &manifest.invoke_template;
        match manifest.caller {
            CallerMode::Debuggee if !template.contains("'{function}'") && !template.contains("\"{function}\"") => {
                return Err(BackendError::Manifest(
                    "a debuggee caller arms the agent with the function name as a string".into(),
                ));
            }
            CallerMode::Debugger if !template.starts_with("{function}(") => {
                return Err(BackendError::Manifest("a debugger caller calls the function directly".into()));
            }
            _ => {}
        }
        Ok(Self { manifest })
    }

    /// A builtin id or a path to a manifest file.
    pub fn resolve(spec: &str) -> Result<Self, BackendError> {
        if spec.ends_with(".toml") && Path::new(spec).is_file() {
            let text = fs::read_to_string(spec).map_err(|e| BackendError::Manifest(format!("{spec}: {e}")))?;
            return Self::from_manifest(&text);
        }
        Self::builtin(spec)
    }

    pub fn id(&self) -> &str {
        &self.manifest.id
    }

    pub fn comment_marker(&self) -> &str {
        &self.manifest.comment_marker
    }

    pub fn extension(&self) -> &str {
        &self.manifest.extension
    }

    pub fn caller(&self) -> CallerMode {
        self.manifest.caller
    }

    pub fn has_compile(&self) -> bool {
        self.manifest.compile.is_some()
    }

    pub fn load_template(&self) -> &str {
        &self.manifest.load_template
    }

    pub fn profile(&self) -> ProbeProfile {
        ProbeProfile {
            caller: self.manifest.caller,
            invoke_template: self.manifest.invoke_template.clone(),
            return_rule: self.manifest.return_rule.clone(),
            reset_cycles: self.manifest.reset_cycles,
            trigger_cycles: self.manifest.trigger_cycles,
        }
    }

    /// Content of the keep-alive agent.
    pub fn agent_source(&self) -> Result<String, BackendError> {
        let asset = &self.manifest.agent.asset;
        if let Some((_, text)) = AGENTS.iter().find(|(name, _)| name == asset) {
            return Ok((*text).to_string());
        }
        fs::read_to_string(asset).map_err(|e| self.prepare_error(format!("agent {asset}: {e}")))
    }

    pub fn agent_line(&self) -> u32 {
        self.manifest.agent.line
    }

    pub fn workdir(&self, env: &BackendEnv) -> PathBuf {
        env.workdir.join(&self.manifest.id)
    }

    /// Whether the external tools this backend needs are installed.
    pub fn is_available(&self, env: &BackendEnv) -> bool {
        let Some((program, args)) = self.manifest.available.split_first() else {
            return true;
        };
        let vars = self.base_vars(env);
        Command::new(fill(program, &vars))
            .args(args.iter().map(|a| fill(a, &vars)))
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok_and(|s| s.success())
    }

    fn base_vars(&self, env: &BackendEnv) -> Vec<(&'static str, String)> {
        let workdir = absolute(&self.workdir(env));
        let runner = workdir.join(agent_file_name(&self.manifest.agent.asset));
        let agent_bin = workdir.join("agent.bin");
        vec![
            ("runner", runner.to_string_lossy().into_owned()),
            ("agent_bin", agent_bin.to_string_lossy().into_owned()),
            ("workdir", workdir.to_string_lossy().into_owned()),
            ("python", env.python.clone()),
            ("mock_adapter", env.mock_adapter.to_string_lossy().into_owned()),
        ]
    }

    /// Writes (and builds) the agent and returns the session configuration.
    pub fn prepare(&self, env: &BackendEnv) -> Result<SessionConfig, BackendError> {
        let workdir = absolute(&self.workdir(env));
        fs::create_dir_all(workdir.join("code")).map_err(|e| self.prepare_error(e.to_string()))?;
        let vars = self.base_vars(env);
        let var = |name: &str| {
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| v.clone())
                .unwrap_or_default()
        };
        let runner = PathBuf::from(var("runner"));
        fs::write(&runner, self.agent_source()?).map_err(|e| self.prepare_error(e.to_string()))?;
        if let Some(build) = &self.manifest.agent.build {
            let command: Vec<String> = build.iter().map(|a| fill(a, &vars)).collect();
            run_tool(&command, &workdir).map_err(|diagnostics| self.prepare_error(diagnostics))?;
        }
        let adapter = &self.manifest.adapter;
        let mut command: Vec<String> = adapter.command.iter().map(|a| fill(a, &vars)).collect();
        command.extend(env.adapter_args.iter().cloned());
        let mut config = SessionConfig::new(command, runner, self.manifest.agent.line, workdir);
        if let Some(init) = &adapter.initialize {
            config.initialize_args = fill_json(init, &vars);
        }
        if !adapter.launch.is_null() {
            config.launch_args = fill_json(&adapter.launch, &vars);
        }
        config.env = adapter.env.iter().map(|(k, v)| (k.clone(), fill(v, &vars))).collect();
        if let Some(addr) = &adapter.socket {
            let (host, port) = addr
                .rsplit_once(':')
                .and_then(|(h, p)| Some((h.to_string(), p.parse().ok()?)))
                .ok_or_else(|| self.prepare_error(format!("bad socket address {addr:?}")))?;
            config.io_mode = IoMode::Socket { host, port };
        }
        config.request_timeout = env.request_timeout;
        config.stop_timeout = env.stop_timeout;
        Ok(config)
    }

    /// Writes `code` to the backend's code directory under a name derived
    /// from `key`.
    pub fn write_source(&self, env: &BackendEnv, key: &str, code: &str) -> std::io::Result<PathBuf> {
        let dir = absolute(&self.workdir(env)).join("code");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{key}.{}", self.manifest.extension));
        fs::write(&path, code)?;
        Ok(path)
    }

    /// Turns a source file into something the agent can load. Interpreted
    /// backends load the source itself.
    pub fn compile(&self, source: &Path) -> Result<PathBuf, CompileError> {
        let Some(spec) = &self.manifest.compile else {
            return Ok(source.to_path_buf());
        };
        let stem = source.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let dir = source.parent().unwrap_or(Path::new("."));
        let artifact = dir.join(spec.artifact.replace("{stem}", &stem));
        let vars = [
            ("source", source.to_string_lossy().into_owned()),
            ("artifact", artifact.to_string_lossy().into_owned()),
            ("stem", stem),
        ];
        let command: Vec<String> = spec.command.iter().map(|a| fill(a, &vars)).collect();
        run_tool(&command, dir).map_err(|diagnostics| CompileError { diagnostics })?;
        Ok(artifact)
    }

    /// Hands `artifact` to the agent idling in `session`.
    pub fn load_code(&self, session: &mut Session, artifact: &Path) -> Result<(), LoadError> {
        let path = artifact.to_string_lossy();
        let expression = self.manifest.load_template.replace("{path}", &path);
        let frame = session.stack_trace()?.first().map(|f| f.id).unwrap_or(0);
        let evaluation = session.evaluate(&expression, frame)?;
        if !evaluation.success {
            return Err(LoadError::Rejected {
                path: path.into_owned(),
                message: evaluation.message.unwrap_or_else(|| "evaluation failed".into()),
            });
        }
        if self.manifest.load_continue {
            session.continue_()?;
        }
        Ok(())
    }

    fn prepare_error(&self, message: String) -> BackendError {
        BackendError::Prepare {
            backend: self.manifest.id.clone(),
            message,
        }
    }
}

fn agent_file_name(asset: &str) -> String {
    Path::new(asset)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| asset.to_string())
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

fn fill_json(value: &Value, vars: &[(&str, String)]) -> Value {
    match value {
        Value::String(s) => Value::String(fill(s, vars)),
        Value::Array(items) => Value::Array(items.iter().map(|v| fill_json(v, vars)).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), fill_json(v, vars))).collect()),
        other => other.clone(),
    }
}

/// Runs an external tool; on failure returns its combined diagnostics.
fn run_tool(command: &[String], cwd: &Path) -> Result<(), String> {
    let Some((program, args)) = command.split_first() else {
        return Err("empty command".into());
    };
    let output = Command::new(program)
        .args(args)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .output()
        .map_err(|e| format!("{program}: {e}"))?;
    if output.status.success() {
        return Ok(());
    }
    let mut text = String::from_utf8_lossy(&output.stderr).into_owned();
    text.push_str(&String::from_utf8_lossy(&output.stdout));
    if text.trim().is_empty() {
        text = format!("{program} exited with {}", output.status);
    }
    Err(text)
}
