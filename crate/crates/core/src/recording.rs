//! Stack recordings: the chronological list of top-frame snapshots captured
//! while stepping through one invocation of a probed function.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub value: String,
}

impl Variable {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackFrameSnapshot {
    /// 1-based source line.
    pub line: u32,
    /// 1-based source column.
    pub column: u32,
    /// Stack depth relative to the first entry into the probed function.
    pub height: u32,
    /// Locals in the order the adapter reported them.
    pub variables: Vec<Variable>,
}

impl StackFrameSnapshot {
    /// Builds a snapshot from raw adapter coordinates. Adapters that report
    /// 0 for "unknown" get clamped to 1; negative heights cannot occur once
    /// the recorder stops at the function exit, but are clamped as well.
    pub fn from_adapter(line: i64, column: i64, height: i64, variables: Vec<Variable>) -> Self {
        Self {
            line: clamp_pos(line),
            column: clamp_pos(column),
            height: height.max(0) as u32,
            variables,
        }
    }

    pub fn value_of(&self, name: &str) -> Option<&str> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.value.as_str())
    }
}

fn clamp_pos(v: i64) -> u32 {
    v.clamp(1, u32::MAX as i64) as u32
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordingStatus {
    Completed,
    /// The step budget ran out; the recording holds exactly that many snapshots.
    Interrupted,
    Failed(String),
}

impl RecordingStatus {
    pub fn as_str(&self) -> &str {
        match self {
            RecordingStatus::Completed => "completed",
            RecordingStatus::Interrupted => "interrupted",
            RecordingStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackRecording {
    pub snapshots: Vec<StackFrameSnapshot>,
    pub return_value: Option<String>,
    pub status: RecordingStatus,
}

impl StackRecording {
    pub fn new() -> Self {
        Self {
            snapshots: Vec::new(),
            return_value: None,
            status: RecordingStatus::Completed,
        }
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn histories(&self) -> Histories {
        histories(self)
    }
}

impl Default for StackRecording {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub value: String,
    /// Line of the snapshot in which this value was first observed.
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableHistory {
    pub name: String,
    pub entries: Vec<HistoryEntry>,
}

impl VariableHistory {
    pub fn values(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.value.as_str()).collect()
    }
}

/// Per-variable value histories, ordered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histories(pub Vec<VariableHistory>);

impl Histories {
    pub fn get(&self, name: &str) -> Option<&VariableHistory> {
        self.0.iter().find(|h| h.name == name)
    }

    pub fn values(&self, name: &str) -> Vec<&str> {
        self.get(name).map(VariableHistory::values).unwrap_or_default()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, VariableHistory> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Collapses the snapshots into one value sequence per variable. A value is
/// appended only when it differs (as text) from the previous one, and carries
/// the line of the snapshot where it first showed up.
pub fn histories(rec: &StackRecording) -> Histories {
    let mut out: Vec<VariableHistory> = Vec::new();
    for snap in &rec.snapshots {
        for var in &snap.variables {
            let history = match out.iter_mut().position(|h| h.name == var.name) {
                Some(i) => &mut out[i],
                None => {
                    out.push(VariableHistory {
                        name: var.name.clone(),
                        entries: Vec::new(),
                    });
                    out.last_mut().expect("just pushed")
                }
            };
            if history.entries.last().map(|e| e.value.as_str()) != Some(var.value.as_str()) {
                history.entries.push(HistoryEntry {
                    value: var.value.clone(),
                    line: snap.line,
                });
            }
        }
    }
    Histories(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("snapshot index {index} out of range for recording of length {len}")]
pub struct IndexError {
    pub index: usize,
    pub len: usize,
}

/// Time travel: snapshot `t` and the source line to highlight for it.
pub fn snapshot_at(rec: &StackRecording, t: usize) -> Result<(&StackFrameSnapshot, u32), IndexError> {
    rec.snapshots
        .get(t)
        .map(|s| (s, s.line))
        .ok_or(IndexError {
            index: t,
            len: rec.snapshots.len(),
        })
}
