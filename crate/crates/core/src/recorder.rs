//! The probe algorithm: trigger one invocation of the probed function inside
//! the keep-alive agent and step over it statement by statement, capturing
//! the top frame before every step.
//!
//! The debugger is abstract ([`ProbeDebugger`]); the std crate implements it
//! on top of a real DAP session, tests implement it in memory.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::probespec::ProbeRequest;
use crate::recording::{RecordingStatus, StackFrameSnapshot, StackRecording, Variable};

/// Default size cap of a recording, in snapshots.
pub const DEFAULT_MAX_STEPS: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameInfo {
    pub id: i64,
    pub name: String,
    pub line: i64,
    pub column: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopeInfo {
    pub name: String,
    pub variables_reference: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Evaluation {
    pub success: bool,
    pub result: Option<String>,
    pub message: Option<String>,
}

pub trait DebuggerError {
    /// The debuggee (or the adapter) went away.
    fn is_terminated(&self) -> bool;
}

/// The debugger operations the recorder needs. Every resuming operation
/// blocks until the debuggee is stopped again.
pub trait ProbeDebugger {
    type Error: DebuggerError;

    fn set_function_breakpoints(&mut self, names: &[String]) -> Result<(), Self::Error>;
    /// Frames of the stopped thread, innermost first.
    fn stack_trace(&mut self) -> Result<Vec<FrameInfo>, Self::Error>;
    fn scopes(&mut self, frame_id: i64) -> Result<Vec<ScopeInfo>, Self::Error>;
    fn variables(&mut self, reference: i64) -> Result<Vec<Variable>, Self::Error>;
    fn evaluate(&mut self, expression: &str, frame_id: i64) -> Result<Evaluation, Self::Error>;
    /// `continue`, then wait for the next stop.
    fn resume(&mut self) -> Result<(), Self::Error>;
    /// `next`, then wait for the next stop.
    fn step_over(&mut self) -> Result<(), Self::Error>;
    /// Wait for a stop caused by something other than a resume request.
    /// Returns false when none arrived within the given patience.
    fn wait_stopped(&mut self, patience: Patience) -> Result<bool, Self::Error>;
    /// Tear the debug session down and bring it back to an idle agent.
    fn restart(&mut self) -> Result<(), Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Patience {
    /// The full stop timeout of the debugger.
    Full,
    /// A short grace period, for stops that may or may not come.
    Brief,
}

/// Who starts the probed call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallerMode {
    /// The expression arms the keep-alive agent, a `continue` lets it call.
    Debuggee,
    /// The debugger evaluates the call expression itself.
    Debugger,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReturnRule {
    None,
    /// Read the variable with this name (`{function}` is substituted) from
    /// the caller's first scope.
    Variable { name: String },
    /// Evaluate this expression in the caller frame.
    Evaluate { expression: String },
}

/// The language-independent half of a backend: everything the recorder
/// needs to know to drive one probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeProfile {
    pub caller: CallerMode,
    /// Template with `{function}` and `{args}` placeholders.
    pub invoke_template: String,
    pub return_rule: ReturnRule,
    /// `continue` cycles after a completed run that bring the agent back to
    /// its idle breakpoint.
    pub reset_cycles: u32,
    /// How many `continue`s to spend waiting for the probed function to be
    /// entered after arming the agent.
    pub trigger_cycles: u32,
}

impl ProbeProfile {
    pub fn invoke_expression(&self, function: &str, args: &[String]) -> String {
        fill_template(&self.invoke_template, function, args)
    }
}

pub fn fill_template(template: &str, function: &str, args: &[String]) -> String {
    template
        .replace("{function}", function)
        .replace("{args}", &args.join(","))
}

/// Finds the return value among the caller's variables according to `rule`.
/// Evaluated rules are not handled here; they need the debugger.
pub fn detect_return(rule: &ReturnRule, function: &str, variables: &[Variable]) -> Option<String> {
    match rule {
        ReturnRule::Variable { name } => {
            let wanted = name.replace("{function}", function);
            variables
                .iter()
                .find(|v| v.name == wanted)
                .map(|v| v.value.clone())
        }
        _ => None,
    }
}

/// Records one invocation of `probe.function` with `probe.args`.
///
/// The code must already be loaded and the debuggee idle in its agent. On
/// return the agent is idle again, either because the run completed and the
/// reset cycles ran, or because the session was restarted (interrupted or
/// terminated runs). Errors other than termination are handed back to the
/// caller untouched.
pub fn record<D: ProbeDebugger>(
    dbg: &mut D,
    profile: &ProbeProfile,
    probe: &ProbeRequest,
    max_steps: usize,
) -> Result<StackRecording, D::Error> {
    let mut rec = StackRecording::new();
    match drive(dbg, profile, probe, max_steps, &mut rec) {
        Ok(()) => Ok(rec),
        Err(e) if e.is_terminated() => {
            dbg.restart()?;
            rec.return_value = None;
            rec.status = RecordingStatus::Failed("terminated".to_string());
            Ok(rec)
        }
        Err(e) => Err(e),
    }
}

fn drive<D: ProbeDebugger>(
    dbg: &mut D,
    profile: &ProbeProfile,
    probe: &ProbeRequest,
    max_steps: usize,
    rec: &mut StackRecording,
) -> Result<(), D::Error> {
    let function = probe.function.as_str();
    dbg.set_function_breakpoints(&[probe.function.clone()])?;

    let agent_frame = top_frame_id(dbg)?;
    let expression = profile.invoke_expression(function, &probe.args);
    let evaluation = dbg.evaluate(&expression, agent_frame)?;
    match profile.caller {
        CallerMode::Debuggee if !evaluation.success => {
            rec.status = RecordingStatus::Failed("invoke".to_string());
            return Ok(());
        }
        CallerMode::Debuggee => {}
        // Some debuggers report a call interrupted by a breakpoint as a
        // failed evaluation, so the stop decides.
        CallerMode::Debugger => {
            let patience = if evaluation.success {
                Patience::Full
            } else {
                Patience::Brief
            };
            if !dbg.wait_stopped(patience)? {
                let reason = if evaluation.success { "invoke-timeout" } else { "invoke" };
                rec.status = RecordingStatus::Failed(reason.to_string());
                return Ok(());
            }
        }
    }

    let mut entered = false;
    for cycle in 0..=profile.trigger_cycles {
        let frames = dbg.stack_trace()?;
        if frames.first().is_some_and(|f| f.name == function) {
            entered = true;
            break;
        }
        if cycle < profile.trigger_cycles {
            dbg.resume()?;
        }
    }
    if !entered {
        rec.status = RecordingStatus::Failed("invoke-timeout".to_string());
        return Ok(());
    }

    let mut initial_depth = None;
    let caller = loop {
        let frames = dbg.stack_trace()?;
        let depth = frames.len() as i64;
        let base = *initial_depth.get_or_insert(depth);
        let Some(top) = frames.first() else {
            break None;
        };
        if top.name != function {
            break Some(top.id);
        }
        if rec.snapshots.len() >= max_steps {
            dbg.restart()?;
            rec.status = RecordingStatus::Interrupted;
            return Ok(());
        }
        let variables = first_scope_variables(dbg, top.id)?;
        rec.snapshots.push(StackFrameSnapshot::from_adapter(
            top.line,
            top.column,
            depth - base,
            variables,
        ));
        dbg.step_over()?;
    };

    if let Some(caller) = caller {
        rec.return_value = match &profile.return_rule {
            ReturnRule::None => None,
            ReturnRule::Variable { .. } => {
                let variables = first_scope_variables(dbg, caller)?;
                detect_return(&profile.return_rule, function, &variables)
            }
            ReturnRule::Evaluate { expression } => {
                let evaluation = dbg.evaluate(expression, caller)?;
                if evaluation.success {
                    evaluation.result
                } else {
                    None
                }
            }
        };
    }
    for _ in 0..profile.reset_cycles {
        dbg.resume()?;
    }
    rec.status = RecordingStatus::Completed;
    Ok(())
}

fn top_frame_id<D: ProbeDebugger>(dbg: &mut D) -> Result<i64, D::Error> {
    Ok(dbg.stack_trace()?.first().map(|f| f.id).unwrap_or(0))
}

fn first_scope_variables<D: ProbeDebugger>(
    dbg: &mut D,
    frame_id: i64,
) -> Result<Vec<Variable>, D::Error> {
    match dbg.scopes(frame_id)?.first() {
        Some(scope) if scope.variables_reference > 0 => dbg.variables(scope.variables_reference),
        _ => Ok(Vec::new()),
    }
}
