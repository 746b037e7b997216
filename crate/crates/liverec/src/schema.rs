//! JSON shapes exchanged with editors: recordings and probe results.

use liverec_core::{AnnotationSpan, ProbeRequest, RecordingStatus, StackFrameSnapshot, StackRecording, Variable};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableJson {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotJson {
    pub line: u32,
    pub column: u32,
    pub height: u32,
    pub variables: Vec<VariableJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryJson {
    pub value: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryJson {
    pub name: String,
    pub entries: Vec<EntryJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordingJson {
    /// `completed`, `interrupted` or `failed`.
    pub status: String,
    /// Why a failed recording failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(rename = "return")]
    pub return_value: Option<String>,
    pub snapshots: Vec<SnapshotJson>,
    pub histories: Vec<HistoryJson>,
}

impl From<&StackRecording> for RecordingJson {
    fn from(rec: &StackRecording) -> Self {
        let reason = match &rec.status {
            RecordingStatus::Failed(r) => Some(r.clone()),
            _ => None,
        };
        Self {
            status: rec.status.as_str().to_string(),
            reason,
            return_value: rec.return_value.clone(),
            snapshots: rec
                .snapshots
                .iter()
                .map(|s| SnapshotJson {
                    line: s.line,
                    column: s.column,
                    height: s.height,
                    variables: s
                        .variables
                        .iter()
                        .map(|v| VariableJson {
                            name: v.name.clone(),
                            value: v.value.clone(),
                        })
                        .collect(),
                })
                .collect(),
            histories: rec
                .histories()
                .iter()
                .map(|h| HistoryJson {
                    name: h.name.clone(),
                    entries: h
                        .entries
                        .iter()
                        .map(|e| EntryJson {
                            value: e.value.clone(),
                            line: e.line,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl RecordingJson {
    /// Rebuilds the recording; histories are derived data and are dropped.
    pub fn to_recording(&self) -> Result<StackRecording, String> {
        let status = match self.status.as_str() {
            "completed" => RecordingStatus::Completed,
            "interrupted" => RecordingStatus::Interrupted,
            "failed" => RecordingStatus::Failed(self.reason.clone().unwrap_or_default()),
            other => return Err(format!("unknown recording status {other:?}")),
        };
        Ok(StackRecording {
            snapshots: self
                .snapshots
                .iter()
                .map(|s| StackFrameSnapshot {
                    line: s.line,
                    column: s.column,
                    height: s.height,
                    variables: s.variables.iter().map(|v| Variable::new(&v.name, &v.value)).collect(),
                })
                .collect(),
            return_value: self.return_value.clone(),
            status,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Recording,
    CompileError,
    AnnotationError,
    EngineError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeJson {
    pub language: String,
    pub function: String,
    pub args: Vec<String>,
    pub annotation_span: AnnotationSpan,
}

impl From<&ProbeRequest> for ProbeJson {
    fn from(p: &ProbeRequest) -> Self {
        Self {
            language: p.language.clone(),
            function: p.function.clone(),
            args: p.args.clone(),
            annotation_span: p.annotation_span,
        }
    }
}

/// What a probe submission produced. Exactly one of `recording` and
/// `message` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub language: String,
    pub outcome: Outcome,
    pub recording: Option<RecordingJson>,
    pub message: Option<String>,
    pub duration_ms: f64,
    pub probe: Option<ProbeJson>,
}

impl ProbeResult {
    pub fn recording(language: &str, probe: &ProbeRequest, rec: &StackRecording, duration_ms: f64) -> Self {
        Self {
            language: language.to_string(),
            outcome: Outcome::Recording,
            recording: Some(rec.into()),
            message: None,
            duration_ms,
            probe: Some(probe.into()),
        }
    }

    pub fn error(language: &str, outcome: Outcome, message: impl Into<String>, probe: Option<&ProbeRequest>, duration_ms: f64) -> Self {
        Self {
            language: language.to_string(),
            outcome,
            recording: None,
            message: Some(message.into()),
            duration_ms,
            probe: probe.map(Into::into),
        }
    }

    pub fn is_recording(&self) -> bool {
        self.outcome == Outcome::Recording
    }
}
