use thiserror::Error;

use super::{export_svg, layout_doc, result_doc, DesignDocument, DocumentError, LayoutDoc, RunDoc};
use crate::design::{DesignError, DesignEvaluator, Part};
use crate::optimizer::{min_wastage_controlled, select_suggestions, Context, OptimizeError, OptimizerConfig, Problem, RunControl, Snapshot};
use crate::layout::MultiLayout;

/// Number of diverse suggestions reported per run.
pub const SUGGESTION_COUNT: usize = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Runs the full search on a document's current design.
pub fn optimize_document(doc: &DesignDocument, config: &OptimizerConfig, control: &RunControl) -> Result<RunDoc, RunError> {
    let (problem, x) = doc.to_problem()?;
    let ctx = Context::new(&problem, config.clone())?;
    ctx.check_start(&x)?;
    let identity: Vec<usize> = (0..problem.design.part_count()).collect();
    let start = ctx.dock(&x, &identity, None)?;
    let results = min_wastage_controlled(&ctx, &x, control)?;
    let suggestions = select_suggestions(&problem.design, &results, SUGGESTION_COUNT)?;
    let docs = results
        .iter()
        .map(|r| Ok(result_doc(r, &problem.design.evaluate(&r.params.values)?, &problem.boards, config.raster_res)))
        .collect::<Result<Vec<_>, DesignError>>()?;
    Ok(RunDoc { design: doc.name.clone(), settings: config.into(), start_wastage: start.wastage(), results: docs, suggestions })
}

/// A rebuilt snapshot: evaluated parts and their layout.
#[derive(Debug, Clone)]
pub struct Replayed {
    pub parts: Vec<Part>,
    pub layout: MultiLayout,
}

pub fn replay_snapshot(problem: &Problem, snap: &Snapshot, raster_res: f64) -> Result<Replayed, RunError> {
    let ctx = Context::new(problem, OptimizerConfig { raster_res, ..Default::default() })?;
    let layout = ctx.replay(snap)?;
    Ok(Replayed { parts: problem.design.evaluate(&snap.params)?, layout })
}

/// Docks the document's current design in part order.
pub fn dock_document(problem: &Problem, x: &[f64], raster_res: f64) -> Result<Replayed, RunError> {
    let ctx = Context::new(problem, OptimizerConfig { raster_res, ..Default::default() })?;
    let identity: Vec<usize> = (0..problem.design.part_count()).collect();
    let state = ctx.dock(x, &identity, None)?;
    Ok(Replayed { parts: state.parts.to_vec(), layout: state.layout })
}

impl Replayed {
    pub fn layout_doc(&self, problem: &Problem, raster_res: f64) -> LayoutDoc {
        layout_doc(&self.layout, &self.parts, &problem.boards, raster_res)
    }

    pub fn svgs(&self, problem: &Problem, raster_res: f64) -> Vec<String> {
        export_svg(&self.layout, &self.parts, &problem.boards, raster_res)
    }
}

/// Cutting plans for the final layout of result `k` of a run.
pub fn result_svgs(doc: &DesignDocument, run: &RunDoc, k: usize) -> Result<Vec<String>, RunError> {
    let (problem, _) = doc.to_problem()?;
    let res = run.settings.raster_res;
    let snap = run.results[k].path.last().expect("paths end at the result");
    Ok(replay_snapshot(&problem, snap, res)?.svgs(&problem, res))
}
