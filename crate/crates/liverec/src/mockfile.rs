//! TOML form of mock programs.
//!
//! ```toml
//! [[function]]
//! name = "foo"
//! params = ["n"]
//! steps = [
//!   { line = 3, set = { i = 0 } },
//!   { line = 4 },
//!   { line = 7, return = 3 },
//! ]
//! ```
//!
//! A statement may `call` another function (with `args`, and `bind` to name
//! the variable receiving the result), `return` a value, `pop` without one,
//! or `goto` the statement with the given 0-based index. `args` on a
//! function restricts that body to calls with exactly those argument texts.

use liverec_core::mock::{MockAction, MockFunction, MockProgram, MockProgramError, MockStep};
use liverec_core::Variable;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum MockFileError {
    #[error("mock program does not parse: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(#[from] MockProgramError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    #[serde(default)]
    function: Vec<Function>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Function {
    name: String,
    #[serde(default)]
    params: Vec<String>,
    args: Option<Vec<toml::Value>>,
    #[serde(default)]
    steps: Vec<Step>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Step {
    line: u32,
    #[serde(default = "one")]
    column: u32,
    #[serde(default)]
    set: toml::Table,
    call: Option<String>,
    #[serde(default)]
    args: Vec<toml::Value>,
    bind: Option<String>,
    #[serde(rename = "return")]
    ret: Option<toml::Value>,
    goto: Option<usize>,
    /// Return without a value.
    #[serde(default)]
    pop: bool,
}

fn one() -> u32 {
    1
}

/// Text of a scalar as a debugger would show it; strings are taken verbatim.
fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn parse_mock_program(text: &str) -> Result<MockProgram, MockFileError> {
    let file: File = toml::from_str(text)?;
    let mut functions = Vec::with_capacity(file.function.len());
    for f in file.function {
        let mut steps = Vec::with_capacity(f.steps.len());
        for (i, s) in f.steps.into_iter().enumerate() {
            let actions = usize::from(s.call.is_some()) + usize::from(s.ret.is_some()) + usize::from(s.goto.is_some())
                + usize::from(s.pop);
            if actions > 1 {
                return Err(MockProgramError(format!(
                    "{}: statement {i} combines call, return, pop and goto",
                    f.name
                ))
                .into());
            }
            if s.call.is_none() && (s.bind.is_some() || !s.args.is_empty()) {
                return Err(MockProgramError(format!("{}: statement {i} has args or bind without call", f.name)).into());
            }
            let action = if let Some(function) = s.call {
                MockAction::Push {
                    function,
                    args: s.args.iter().map(value_text).collect(),
                    bind: s.bind,
                }
            } else if let Some(v) = s.ret {
                MockAction::Pop(Some(value_text(&v)))
            } else if let Some(target) = s.goto {
                MockAction::Goto(target)
            } else if s.pop {
                MockAction::Pop(None)
            } else {
                MockAction::Stay
            };
            steps.push(MockStep {
                line: s.line,
                column: s.column,
                set: s.set.iter().map(|(k, v)| Variable::new(k.clone(), value_text(v))).collect(),
                action,
            });
        }
        functions.push(MockFunction {
            name: f.name,
            params: f.params,
            when_args: f.args.map(|a| a.iter().map(value_text).collect()),
            steps,
        });
    }
    let program = MockProgram { functions };
    program.validate()?;
    Ok(program)
}

/// Writes `program` back as TOML accepted by [`parse_mock_program`].
pub fn render_mock_program(program: &MockProgram) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("[[function]]\n");
        out.push_str(&format!("name = {}\n", quote(&f.name)));
        out.push_str(&format!("params = {}\n", list(&f.params)));
        if let Some(args) = &f.when_args {
            out.push_str(&format!("args = {}\n", list(args)));
        }
        out.push_str("steps = [\n");
        for s in &f.steps {
            let mut fields = vec![format!("line = {}", s.line)];
            if s.column != 1 {
                fields.push(format!("column = {}", s.column));
            }
            if !s.set.is_empty() {
                let set: Vec<String> = s
                    .set
                    .iter()
                    .map(|v| format!("{} = {}", key(&v.name), quote(&v.value)))
                    .collect();
                fields.push(format!("set = {{ {} }}", set.join(", ")));
            }
            match &s.action {
                MockAction::Stay => {}
                MockAction::Push { function, args, bind } => {
                    fields.push(format!("call = {}", quote(function)));
                    if !args.is_empty() {
                        fields.push(format!("args = {}", list(args)));
                    }
                    if let Some(b) = bind {
                        fields.push(format!("bind = {}", quote(b)));
                    }
                }
                MockAction::Pop(Some(v)) => fields.push(format!("return = {}", quote(v))),
                MockAction::Pop(None) => fields.push("pop = true".into()),
                MockAction::Goto(t) => fields.push(format!("goto = {t}")),
            }
            out.push_str(&format!("  {{ {} }},\n", fields.join(", ")));
        }
        out.push_str("]\n");
    }
    out
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn key(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        s.to_string()
    } else {
        quote(s)
    }
}

fn list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| quote(s)).collect();
    format!("[{}]", quoted.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOO: &str = r#"
#@foo(3)
[[function]]
name = "foo"
params = ["n"]
steps = [
  { line = 3, set = { i = 0 } },
  { line = 4 },
  { line = 7, return = 3 },
]
"#;

    #[test]
    fn parses_steps_and_values() {
        let p = parse_mock_program(FOO).unwrap();
        let f = &p.functions[0];
        assert_eq!(f.params, ["n"]);
        assert_eq!(f.steps[0].set, vec![Variable::new("i", "0")]);
        assert_eq!(f.steps[2].action, MockAction::Pop(Some("3".into())));
    }

    #[test]
    fn set_keeps_written_order() {
        let p = parse_mock_program(
            "[[function]]\nname = \"f\"\nsteps = [{ line = 1, set = { z = 1, a = 2, m = \"'x'\" } }]\n",
        )
        .unwrap();
        let names: Vec<&str> = p.functions[0].steps[0].set.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["z", "a", "m"]);
        assert_eq!(p.functions[0].steps[0].set[2].value, "'x'");
    }

    #[test]
    fn rejects_conflicting_actions_and_bad_references() {
        let both = "[[function]]\nname = \"f\"\nsteps = [{ line = 1, return = 1, goto = 0 }]\n";
        assert!(parse_mock_program(both).is_err());
        let missing = "[[function]]\nname = \"f\"\nsteps = [{ line = 1, call = \"g\" }]\n";
        assert!(matches!(parse_mock_program(missing), Err(MockFileError::Invalid(_))));
        let typo = "[[function]]\nname = \"f\"\nstep = []\n";
        assert!(matches!(parse_mock_program(typo), Err(MockFileError::Syntax(_))));
    }

    #[test]
    fn render_round_trip() {
        let p = parse_mock_program(FOO).unwrap();
        assert_eq!(parse_mock_program(&render_mock_program(&p)).unwrap(), p);
    }
}
