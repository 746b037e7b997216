//! Probe annotations: a whole-line comment of the form `<marker>@name(arg, ...)`.
//!
//! Arguments are kept as raw source text. They are spliced verbatim into the
//! backend's invocation expression, so nothing here knows any literal syntax
//! beyond bracket and quote balancing.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct AnnotationError {
    pub line: usize,
    pub message: String,
}

/// Where the annotation sits: 1-based line, first and last 1-based column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AnnotationSpan {
    pub line: usize,
    pub start_col: usize,
    pub end_col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRequest {
    pub source: String,
    pub language: String,
    pub function: String,
    pub args: Vec<String>,
    pub annotation_span: AnnotationSpan,
}

impl ProbeRequest {
    pub fn for_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }

    /// The source with the annotation line emptied. Two sources that differ
    /// only in their example inputs map to the same text.
    pub fn code_without_annotation(&self) -> String {
        let mut out = String::with_capacity(self.source.len());
        for (idx, line) in self.source.split_inclusive('\n').enumerate() {
            if idx + 1 == self.annotation_span.line {
                if line.ends_with("\r\n") {
                    out.push_str("\r\n");
                } else if line.ends_with('\n') {
                    out.push('\n');
                }
            } else {
                out.push_str(line);
            }
        }
        out
    }
}

/// Renders the annotation text for `function(args...)`.
pub fn render_annotation(comment_marker: &str, function: &str, args: &[String]) -> String {
    let mut out = String::new();
    out.push_str(comment_marker);
    out.push('@');
    out.push_str(function);
    out.push('(');
    out.push_str(&args.join(","));
    out.push(')');
    out
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Finds the first probe annotation in `source`.
///
/// Lines are scanned top to bottom; only whole-line comments starting with
/// `comment_marker` are considered. A comment whose content is `@` followed
/// by an identifier and `(` is an annotation attempt and must parse, anything
/// else (`// @todo`, plain comments) is ignored. Later annotations are not
/// looked at once one has been found.
pub fn parse_annotation(
    source: &str,
    comment_marker: &str,
) -> Result<Option<ProbeRequest>, AnnotationError> {
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let indent = raw.len() - raw.trim_start().len();
        let Some(content) = raw.trim_start().strip_prefix(comment_marker) else {
            continue;
        };
        let content_trimmed = content.trim_start();
        let Some(after_at) = content_trimmed.strip_prefix('@') else {
            continue;
        };
        let name_len = after_at
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after_at.len());
        let name = &after_at[..name_len];
        if !is_identifier(name) || !after_at[name_len..].trim_start().starts_with('(') {
            continue;
        }
        let (function, args) = parse_call(after_at.trim_end()).map_err(|message| AnnotationError {
            line: line_no,
            message,
        })?;
        let start_byte = indent;
        let end_byte = raw.trim_end().len();
        let span = AnnotationSpan {
            line: line_no,
            start_col: raw[..start_byte].chars().count() + 1,
            end_col: raw[..end_byte].chars().count(),
        };
        return Ok(Some(ProbeRequest {
            source: source.to_string(),
            language: String::new(),
            function,
            args,
            annotation_span: span,
        }));
    }
    Ok(None)
}

/// Parses `name(arg, ...)` where the closing parenthesis ends the text.
/// Commas split arguments only at nesting depth zero and outside quotes.
pub fn parse_call(text: &str) -> Result<(String, Vec<String>), String> {
    let text = text.trim();
    let open = text
        .find('(')
        .ok_or_else(|| "expected `name(arguments)`".to_string())?;
    let name = text[..open].trim();
    if !is_identifier(name) {
        return Err(alloc::format!("{name:?} is not an identifier"));
    }
    let inner_and_rest = &text[open + 1..];
    let close = matching_close(inner_and_rest)?;
    let rest = inner_and_rest[close + 1..].trim();
    if !rest.is_empty() {
        return Err(alloc::format!("unexpected text after call: {rest:?}"));
    }
    let args = split_arguments(&inner_and_rest[..close])?;
    Ok((name.to_string(), args))
}

/// Splits a comma separated argument list, honouring brackets and quotes.
pub fn split_arguments(list: &str) -> Result<Vec<String>, String> {
    if list.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut args = Vec::new();
    let mut scanner = Scanner::default();
    let mut start = 0;
    for (i, c) in list.char_indices() {
        if scanner.feed(c)? && c == ',' {
            args.push(list[start..i].trim().to_string());
            start = i + 1;
        }
    }
    scanner.finish()?;
    args.push(list[start..].trim().to_string());
    if args.iter().any(String::is_empty) {
        return Err("empty argument".into());
    }
    Ok(args)
}

/// Byte offset of the `)` closing an already opened parenthesis.
fn matching_close(text: &str) -> Result<usize, String> {
    let mut scanner = Scanner::default();
    scanner.stack.push(')');
    for (i, c) in text.char_indices() {
        scanner.feed(c)?;
        if scanner.stack.is_empty() {
            return Ok(i);
        }
    }
    if scanner.quote.is_some() {
        Err("unterminated string literal".into())
    } else {
        Err("unbalanced parentheses".into())
    }
}

#[derive(Default)]
struct Scanner {
    stack: Vec<char>,
    quote: Option<char>,
    escaped: bool,
}

impl Scanner {
    /// Consumes one character. Returns true when the character sits at
    /// nesting depth zero outside of any string literal.
    fn feed(&mut self, c: char) -> Result<bool, String> {
        if let Some(q) = self.quote {
            if self.escaped {
                self.escaped = false;
            } else if c == '\\' {
                self.escaped = true;
            } else if c == q {
                self.quote = None;
            }
            return Ok(false);
        }
        match c {
            '"' | '\'' => {
                self.quote = Some(c);
                Ok(false)
            }
            '(' => {
                self.stack.push(')');
                Ok(false)
            }
            '[' => {
                self.stack.push(']');
                Ok(false)
            }
            '{' => {
                self.stack.push('}');
                Ok(false)
            }
            ')' | ']' | '}' => match self.stack.pop() {
                Some(expected) if expected == c => Ok(false),
                _ => Err(alloc::format!("unbalanced {c:?}")),
            },
            _ => Ok(self.stack.is_empty()),
        }
    }

    fn finish(&self) -> Result<(), String> {
        if self.quote.is_some() {
            Err("unterminated string literal".into())
        } else if !self.stack.is_empty() {
            Err("unbalanced brackets".into())
        } else {
            Ok(())
        }
    }
}
