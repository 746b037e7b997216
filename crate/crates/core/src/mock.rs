//! Scripted debuggee used as a deterministic stand-in for a real language
//! runtime.
//!
//! A [`MockProgram`] is a set of functions, each a fixed list of statements
//! with the variable updates they perform and what they do to the call stack.
//! [`MockMachine`] executes such a program beneath a virtual keep-alive agent
//! and answers the questions a debug adapter has to answer: where are we,
//! what are the locals, run until the next stop.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::recording::Variable;

/// Name of the agent-frame variable holding the value returned by the last
/// probed call.
pub const RETURN_VARIABLE: &str = "__return__";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockAction {
    /// Fall through to the next statement.
    Stay,
    /// Call `function`. The statement's updates (and `bind`) are applied once
    /// the callee returns.
    Push {
        function: String,
        args: Vec<String>,
        bind: Option<String>,
    },
    /// Return from the current function.
    Pop(Option<String>),
    /// Continue at statement `index` of the same function.
    Goto(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockStep {
    pub line: u32,
    pub column: u32,
    /// Updates performed by executing this statement.
    pub set: Vec<Variable>,
    pub action: MockAction,
}

impl MockStep {
    pub fn at(line: u32) -> Self {
        Self {
            line,
            column: 1,
            set: Vec::new(),
            action: MockAction::Stay,
        }
    }

    pub fn set(mut self, name: &str, value: &str) -> Self {
        self.set.push(Variable::new(name, value));
        self
    }

    pub fn action(mut self, action: MockAction) -> Self {
        self.action = action;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockFunction {
    pub name: String,
    /// Parameter names bound, in order, to the raw argument texts of a call.
    pub params: Vec<String>,
    /// When present, this body is only used for calls with exactly these
    /// arguments. Lets a script describe recursion without conditionals.
    pub when_args: Option<Vec<String>>,
    pub steps: Vec<MockStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MockProgram {
    pub functions: Vec<MockFunction>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid mock program: {0}")]
pub struct MockProgramError(pub String);

impl MockProgram {
    pub fn validate(&self) -> Result<(), MockProgramError> {
        for f in &self.functions {
            if !crate::probespec::is_identifier(&f.name) {
                return Err(MockProgramError(format!("{:?} is not an identifier", f.name)));
            }
            for (i, step) in f.steps.iter().enumerate() {
                if step.line == 0 || step.column == 0 {
                    return Err(MockProgramError(format!(
                        "{}: statement {i} has a zero line or column",
                        f.name
                    )));
                }
                match &step.action {
                    MockAction::Push { function, .. } if !self.defines(function) => {
                        return Err(MockProgramError(format!(
                            "{}: statement {i} calls undefined function {function:?}",
                            f.name
                        )));
                    }
                    MockAction::Goto(target) if *target >= f.steps.len() => {
                        return Err(MockProgramError(format!(
                            "{}: statement {i} jumps to missing statement {target}",
                            f.name
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn defines(&self, name: &str) -> bool {
        self.functions.iter().any(|f| f.name == name)
    }

    /// Picks the body for a call: an exact `when_args` match first, then
    /// the unconditional body.
    fn resolve(&self, name: &str, args: &[String]) -> Option<usize> {
        let exact = self.functions.iter().position(|f| {
            f.name == name
                && f.when_args.as_ref().is_some_and(|w| {
                    w.len() == args.len() && w.iter().zip(args).all(|(a, b)| a.trim() == b.trim())
                })
        });
        exact.or_else(|| {
            self.functions
                .iter()
                .position(|f| f.name == name && f.when_args.is_none())
        })
    }
}

/// Where the virtual agent lives in the virtual source tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentLayout {
    pub frame_name: String,
    pub path: String,
    /// Line of the idle loop; the runner breakpoint goes here.
    pub idle_line: u32,
    /// Line of the call into the probed function.
    pub call_line: u32,
}

impl Default for AgentLayout {
    fn default() -> Self {
        Self {
            frame_name: "<agent>".into(),
            path: "mock_agent.txt".into(),
            idle_line: 16,
            call_line: 21,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResumeMode {
    Continue,
    Next,
    StepOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Breakpoint,
    Step,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Breakpoint => "breakpoint",
            StopReason::Step => "step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Stopped(StopReason),
    /// The execution budget ran out before anything stopped it; from the
    /// outside the debuggee simply keeps running.
    Running,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectCall {
    /// Entered a function with a breakpoint; the debuggee is stopped in it.
    Stopped,
    /// Ran to completion without stopping.
    Returned(Option<String>),
    Running,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameView {
    pub id: i64,
    pub name: String,
    pub path: String,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Agent {
    Idle,
    Calling,
    Returned(Option<String>),
}

#[derive(Debug, Clone)]
struct ActiveFrame {
    function: usize,
    pc: usize,
    locals: Vec<Variable>,
}

/// Default number of statements executed per resume before the machine
/// reports it is still running.
pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct MockMachine {
    program: MockProgram,
    layout: AgentLayout,
    frames: Vec<ActiveFrame>,
    agent: Agent,
    function_breakpoints: BTreeSet<String>,
    idle_breakpoint: bool,
    trigger: Option<(String, Vec<String>)>,
    budget: usize,
}

enum Exec {
    /// A frame was pushed.
    Entered,
    /// The current frame moved to another statement.
    Advanced,
    /// A frame was popped.
    Returned,
}

impl MockMachine {
    pub fn new(program: MockProgram, layout: AgentLayout) -> Self {
        Self {
            program,
            layout,
            frames: Vec::new(),
            agent: Agent::Idle,
            function_breakpoints: BTreeSet::new(),
            idle_breakpoint: false,
            trigger: None,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn layout(&self) -> &AgentLayout {
        &self.layout
    }

    pub fn program(&self) -> &MockProgram {
        &self.program
    }

    /// Swaps in new code. Only allowed while no probed call is active.
    pub fn load(&mut self, program: MockProgram) -> Result<(), MockProgramError> {
        program.validate()?;
        if !self.frames.is_empty() {
            return Err(MockProgramError("cannot load while a call is active".into()));
        }
        self.program = program;
        self.trigger = None;
        Ok(())
    }

    /// Replaces the breakpoints of the agent source. Returns whether each
    /// requested line is verified (only the idle line is).
    pub fn set_agent_breakpoints(&mut self, lines: &[u32]) -> Vec<bool> {
        self.idle_breakpoint = lines.contains(&self.layout.idle_line);
        lines.iter().map(|l| *l == self.layout.idle_line).collect()
    }

    /// Replaces the function breakpoints; verified when the function exists.
    pub fn set_function_breakpoints(&mut self, names: &[String]) -> Vec<bool> {
        self.function_breakpoints = names.iter().cloned().collect();
        names.iter().map(|n| self.program.defines(n)).collect()
    }

    /// Arms the agent: the next loop iteration calls `function(args)`.
    pub fn arm(&mut self, function: &str, args: Vec<String>) {
        self.trigger = Some((function.to_string(), args));
    }

    /// The debuggee starts running after configuration.
    pub fn start(&mut self) -> RunOutcome {
        self.agent = Agent::Idle;
        if self.idle_breakpoint {
            RunOutcome::Stopped(StopReason::Breakpoint)
        } else {
            RunOutcome::Running
        }
    }

    /// Calls `function` from the debugger while the agent is stopped.
    pub fn call_direct(&mut self, function: &str, args: &[String]) -> Result<DirectCall, String> {
        if !self.frames.is_empty() {
            return Err("a call is already active".into());
        }
        let Some(index) = self.program.resolve(function, args) else {
            return Err(format!("no function named {function:?}"));
        };
        self.push_frame(index, args);
        self.agent = Agent::Calling;
        if self.is_armed(index) {
            return Ok(DirectCall::Stopped);
        }
        let mut budget = self.budget;
        while !self.frames.is_empty() {
            if budget == 0 {
                return Ok(DirectCall::Running);
            }
            budget -= 1;
            if let Exec::Entered = self.exec() {
                if self.top_is_armed() {
                    return Ok(DirectCall::Stopped);
                }
            }
        }
        let value = match core::mem::replace(&mut self.agent, Agent::Idle) {
            Agent::Returned(v) => v,
            _ => None,
        };
        Ok(DirectCall::Returned(value))
    }

    /// Resumes execution until the next stop.
    pub fn resume(&mut self, mode: ResumeMode) -> RunOutcome {
        let start_depth = self.frames.len();
        let mut budget = self.budget;

        if start_depth == 0 {
            match self.agent {
                Agent::Returned(_) | Agent::Calling => {
                    self.agent = Agent::Idle;
                    return self.arrive_at_idle(mode);
                }
                Agent::Idle => {
                    if !self.take_trigger() {
                        return self.arrive_at_idle(mode);
                    }
                    if self.top_is_armed() {
                        return RunOutcome::Stopped(StopReason::Breakpoint);
                    }
                }
            }
        }

        loop {
            if self.frames.is_empty() {
                // The probed call returned into the agent.
                match mode {
                    ResumeMode::Next | ResumeMode::StepOut => {
                        return RunOutcome::Stopped(StopReason::Step)
                    }
                    ResumeMode::Continue => {
                        self.agent = Agent::Idle;
                        if self.idle_breakpoint {
                            return RunOutcome::Stopped(StopReason::Breakpoint);
                        }
                        if !self.take_trigger() {
                            return RunOutcome::Running;
                        }
                        if self.top_is_armed() {
                            return RunOutcome::Stopped(StopReason::Breakpoint);
                        }
                        continue;
                    }
                }
            }
            if budget == 0 {
                return RunOutcome::Running;
            }
            budget -= 1;
            let event = self.exec();
            if let Exec::Entered = event {
                if self.top_is_armed() {
                    return RunOutcome::Stopped(StopReason::Breakpoint);
                }
            }
            let depth = self.frames.len();
            if depth == 0 {
                continue;
            }
            let stepped = match mode {
                ResumeMode::Next => depth <= start_depth && !matches!(event, Exec::Entered),
                ResumeMode::StepOut => depth < start_depth,
                ResumeMode::Continue => false,
            };
            if stepped {
                return RunOutcome::Stopped(StopReason::Step);
            }
        }
    }

    fn arrive_at_idle(&mut self, mode: ResumeMode) -> RunOutcome {
        match mode {
            ResumeMode::Next => RunOutcome::Stopped(StopReason::Step),
            _ if self.idle_breakpoint => RunOutcome::Stopped(StopReason::Breakpoint),
            _ => RunOutcome::Running,
        }
    }

    /// Starts the armed call, if any. An armed name that does not resolve is
    /// dropped, as a real agent would swallow the failed lookup.
    fn take_trigger(&mut self) -> bool {
        let Some((name, args)) = self.trigger.take() else {
            return false;
        };
        let Some(index) = self.program.resolve(&name, &args) else {
            return false;
        };
        self.push_frame(index, &args);
        self.agent = Agent::Calling;
        true
    }

    fn is_armed(&self, function: usize) -> bool {
        self.function_breakpoints
            .contains(&self.program.functions[function].name)
    }

    fn top_is_armed(&self) -> bool {
        self.frames.last().is_some_and(|f| self.is_armed(f.function))
    }

    fn push_frame(&mut self, function: usize, args: &[String]) {
        let params = &self.program.functions[function].params;
        let locals = params
            .iter()
            .zip(args)
            .map(|(p, a)| Variable::new(p.clone(), a.trim()))
            .collect();
        self.frames.push(ActiveFrame {
            function,
            pc: 0,
            locals,
        });
    }

    /// Executes the statement at the top frame's program counter.
    fn exec(&mut self) -> Exec {
        let top = self.frames.len() - 1;
        let frame = &self.frames[top];
        let body = &self.program.functions[frame.function];
        let Some(step) = body.steps.get(frame.pc).cloned() else {
            return self.return_from_top(None);
        };
        match step.action {
            MockAction::Push { function, args, .. } => {
                match self.program.resolve(&function, &args) {
                    Some(callee) => {
                        self.push_frame(callee, &args);
                        Exec::Entered
                    }
                    // Validation guarantees the name exists; a conditional
                    // body without a fallback behaves like a no-op call.
                    None => self.advance(top, step.set, None, None),
                }
            }
            MockAction::Stay => {
                let next = self.frames[top].pc + 1;
                self.advance(top, step.set, None, Some(next))
            }
            MockAction::Goto(target) => self.advance(top, step.set, None, Some(target)),
            MockAction::Pop(value) => {
                apply(&mut self.frames[top].locals, &step.set);
                self.return_from_top(value)
            }
        }
    }

    fn advance(
        &mut self,
        index: usize,
        set: Vec<Variable>,
        bound: Option<(String, String)>,
        next: Option<usize>,
    ) -> Exec {
        let frame = &mut self.frames[index];
        apply(&mut frame.locals, &set);
        if let Some((name, value)) = bound {
            apply(&mut frame.locals, &[Variable::new(name, value)]);
        }
        frame.pc = next.unwrap_or(frame.pc + 1);
        if frame.pc >= self.program.functions[frame.function].steps.len() {
            return self.return_from_top(None);
        }
        Exec::Advanced
    }

    fn return_from_top(&mut self, value: Option<String>) -> Exec {
        self.frames.pop();
        let Some(caller) = self.frames.len().checked_sub(1) else {
            self.agent = Agent::Returned(value);
            return Exec::Returned;
        };
        let frame = &self.frames[caller];
        let step = self.program.functions[frame.function].steps[frame.pc].clone();
        let bound = match (&step.action, value) {
            (MockAction::Push { bind: Some(name), .. }, Some(v)) => Some((name.clone(), v)),
            _ => None,
        };
        self.advance(caller, step.set, bound, None);
        Exec::Returned
    }

    /// Frames innermost first; the agent frame is always last.
    pub fn frames(&self) -> Vec<FrameView> {
        let mut out: Vec<FrameView> = self
            .frames
            .iter()
            .enumerate()
            .rev()
            .map(|(depth, f)| {
                let body = &self.program.functions[f.function];
                let (line, column) = body
                    .steps
                    .get(f.pc)
                    .or(body.steps.last())
                    .map_or((1, 1), |s| (s.line, s.column));
                FrameView {
                    id: depth as i64 + 2,
                    name: body.name.clone(),
                    path: String::new(),
                    line,
                    column,
                }
            })
            .collect();
        let agent_line = match self.agent {
            Agent::Idle => self.layout.idle_line,
            _ => self.layout.call_line,
        };
        out.push(FrameView {
            id: 1,
            name: self.layout.frame_name.clone(),
            path: self.layout.path.clone(),
            line: agent_line,
            column: 1,
        });
        out
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// Locals of the frame with `id`, in binding order.
    pub fn locals(&self, id: i64) -> Option<Vec<Variable>> {
        if id == 1 {
            return Some(match &self.agent {
                Agent::Returned(Some(v)) => alloc::vec![Variable::new(RETURN_VARIABLE, v.clone())],
                _ => Vec::new(),
            });
        }
        let index = usize::try_from(id - 2).ok()?;
        self.frames.get(index).map(|f| f.locals.clone())
    }
}

/// What an `evaluate` expression sent to the mock agent asks for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentCommand {
    /// `load('path')`
    Load(String),
    /// `set_method('name',[args])`
    Arm { function: String, args: Vec<String> },
    /// `name(args)`
    Call { function: String, args: Vec<String> },
    /// A bare identifier.
    Lookup(String),
}

pub fn parse_agent_command(expression: &str) -> Option<AgentCommand> {
    let expression = expression.trim();
    if crate::probespec::is_identifier(expression) {
        return Some(AgentCommand::Lookup(expression.to_string()));
    }
    let (name, args) = crate::probespec::parse_call(expression).ok()?;
    match name.as_str() {
        "load" => match args.as_slice() {
            [path] => Some(AgentCommand::Load(unquote(path)?.to_string())),
            _ => None,
        },
        "set_method" => match args.as_slice() {
            [function, list] => {
                let inner = list.strip_prefix('[')?.strip_suffix(']')?;
                Some(AgentCommand::Arm {
                    function: unquote(function)?.to_string(),
                    args: crate::probespec::split_arguments(inner).ok()?,
                })
            }
            _ => None,
        },
        _ => Some(AgentCommand::Call { function: name, args }),
    }
}

fn unquote(text: &str) -> Option<&str> {
    let text = text.trim();
    ['\'', '"']
        .iter()
        .find_map(|q| text.strip_prefix(*q)?.strip_suffix(*q))
}

fn apply(locals: &mut Vec<Variable>, set: &[Variable]) {
    for update in set {
        match locals.iter_mut().find(|v| v.name == update.name) {
            Some(existing) => existing.value = update.value.clone(),
            None => locals.push(update.clone()),
        }
    }
}
