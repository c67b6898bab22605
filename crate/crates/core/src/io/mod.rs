//! Design documents, layout/result JSON and SVG cutting plans.

mod document;
mod plan;
mod results;
mod run;

pub use document::{
    load_design, save_design, AffineDoc, BoardDoc, ConstraintDoc, DesignDoc, DesignDocument, ExpressionDoc, MaterialDoc, ParameterDoc,
    ParametricPartDoc, PlankDoc, SCHEMA_VERSION,
};
pub use plan::{export_svg, fmt_mm, rotate, shared_edges, PlacementTransform, SharedEdge};
pub use results::{layout_doc, result_doc, to_canonical_json, BoardLayoutDoc, LayoutDoc, PlacementDoc, ResultDoc, RunDoc, SearchSettings};
pub use run::{dock_document, optimize_document, replay_snapshot, result_svgs, Replayed, RunError, SUGGESTION_COUNT};

use thiserror::Error;

/// A document problem, located by a JSON path such as `boards[0].width`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", if path.is_empty() { String::new() } else { format!("{path}: ") })]
pub struct DocumentError {
    pub path: String,
    pub message: String,
}

impl DocumentError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}
