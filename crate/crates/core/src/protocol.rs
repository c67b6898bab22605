//! Request and response bodies of the session HTTP API.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::constraints::ConstraintKind;
use crate::design::DesignParams;
use crate::effectiveness::EffectivenessVerdict;
use crate::io::LayoutDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunState {
    Idle,
    Running,
    Done,
    Cancelled,
    Failed,
}

impl fmt::Display for RunState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunState::Idle => "idle",
            RunState::Running => "running",
            RunState::Done => "done",
            RunState::Cancelled => "cancelled",
            RunState::Failed => "failed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusDoc {
    pub state: RunState,
    /// Number of runs started in this session.
    pub run: u64,
    pub generations_done: usize,
    pub generations: usize,
    /// `generations_done / generations`, in [0, 1].
    pub progress: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeAccepted {
    pub run: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionDoc {
    pub k: usize,
    /// Index of the suggestion in the run's full result list.
    pub result: usize,
    pub wastage: f64,
    pub usage: f64,
    /// Number of snapshots on the exploration path.
    pub path_length: usize,
    pub layout: LayoutDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionsDoc {
    pub run: u64,
    pub start_wastage: f64,
    pub suggestions: Vec<SuggestionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPointDoc {
    pub k: usize,
    pub t: usize,
    pub path_length: usize,
    pub params: DesignParams,
    pub wastage: f64,
    pub ordering: Vec<usize>,
    pub layout: LayoutDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectRequest {
    pub k: usize,
    /// Path index; the end of the path when absent.
    #[serde(default)]
    pub t: Option<usize>,
}

/// Lock of one in-plane size of a named part (0 = first, 1 = second).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeLock {
    pub part: String,
    pub size: usize,
    /// Required value in mm; the current size when absent.
    #[serde(default)]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterLock {
    pub name: String,
    #[serde(default)]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockRequest {
    #[serde(default)]
    pub sizes: Vec<SizeLock>,
    #[serde(default)]
    pub parameters: Vec<ParameterLock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockResponse {
    /// Indices of the appended constraint rows.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditMode {
    Strict,
    Flush,
    Override,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRequest {
    /// Imposed change, one entry per design parameter.
    pub u: Vec<f64>,
    pub mode: EditMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditStatus {
    /// The whole edit was applied with a valid correction.
    Applied,
    /// Only the fraction `scale` of the edit could be applied.
    Partial,
    /// Applied without correction.
    Overridden,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub row: usize,
    pub kind: ConstraintKind,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditResponse {
    pub status: EditStatus,
    pub scale: f64,
    pub params: DesignParams,
    pub violated_rows: Vec<RowDiagnostic>,
    /// Parameters below their minimum length.
    pub min_length_violations: Vec<String>,
    pub effectiveness: EffectivenessVerdict,
}
