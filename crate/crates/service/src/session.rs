use std::sync::Arc;

use offcut_core::constraints::{ConstraintKind, EPS_RESIDUAL};
use offcut_core::design::{DesignEvaluator, DesignParams, PlankDesign};
use offcut_core::effectiveness::{check_effectiveness, dynamic_effectiveness_constraints};
use offcut_core::io::{dock_document, replay_snapshot, ConstraintDoc, DesignDoc, DesignDocument, LayoutDoc, Replayed, RunDoc, RunError};
use offcut_core::optimizer::{Context, OptimizeError, OptimizerConfig, Problem, RunControl, Snapshot};
use offcut_core::protocol::{
    EditMode, EditRequest, EditResponse, EditStatus, LockRequest, PathPointDoc, RowDiagnostic, RunState, StatusDoc, SuggestionDoc,
    SuggestionsDoc,
};

use crate::error::{ApiError, ApiResult};

/// A finished run with the problem it was computed on.
#[derive(Debug)]
pub struct Completed {
    pub run: u64,
    pub problem: Problem,
    pub result: RunDoc,
}

impl Completed {
    fn path(&self, k: usize) -> ApiResult<&[Snapshot]> {
        let idx = *self.result.suggestions.get(k).ok_or_else(|| ApiError::not_found(format!("no suggestion {k}")))?;
        Ok(&self.result.results[idx].path)
    }

    fn snapshot(&self, k: usize, t: Option<usize>) -> ApiResult<&Snapshot> {
        let path = self.path(k)?;
        let t = t.unwrap_or(path.len() - 1);
        path.get(t).ok_or_else(|| ApiError::not_found(format!("suggestion {k} has no path index {t} (length {})", path.len())))
    }

    pub fn suggestions(&self) -> SuggestionsDoc {
        let suggestions = self
            .result
            .suggestions
            .iter()
            .enumerate()
            .map(|(k, &idx)| {
                let r = &self.result.results[idx];
                SuggestionDoc { k, result: idx, wastage: r.wastage, usage: r.usage, path_length: r.path.len(), layout: r.layout.clone() }
            })
            .collect();
        SuggestionsDoc { run: self.run, start_wastage: self.result.start_wastage, suggestions }
    }

    pub fn path_point(&self, k: usize, t: usize) -> ApiResult<PathPointDoc> {
        let path_length = self.path(k)?.len();
        let snap = self.snapshot(k, Some(t))?;
        let res = self.result.settings.raster_res;
        let replayed = replay_snapshot(&self.problem, snap, res)?;
        Ok(PathPointDoc {
            k,
            t,
            path_length,
            params: DesignParams::new(self.problem.design.param_names(), snap.params.clone()),
            wastage: snap.wastage,
            ordering: snap.ordering.clone(),
            layout: replayed.layout_doc(&self.problem, res),
        })
    }
}

/// The plan adopted by the last selection.
#[derive(Debug, Clone)]
struct Selected {
    completed: Arc<Completed>,
    snapshot: Snapshot,
}

#[derive(Debug)]
pub struct Session {
    pub doc: DesignDocument,
    run: u64,
    state: RunState,
    generations: usize,
    control: Option<Arc<RunControl>>,
    /// Generations finished by the last run that ended.
    finished: usize,
    error: Option<String>,
    last: Option<Arc<Completed>>,
    selected: Option<Selected>,
}

impl Session {
    pub fn new(doc: DesignDocument) -> Self {
        Self { doc, run: 0, state: RunState::Idle, generations: 0, control: None, finished: 0, error: None, last: None, selected: None }
    }

    pub fn status(&self) -> StatusDoc {
        let generations_done = self.control.as_ref().map_or(self.finished, |c| c.generations_done());
        let progress = match (self.generations, self.state) {
            (0, RunState::Done) => 1.0,
            (0, _) => 0.0,
            (g, _) => generations_done as f64 / g as f64,
        };
        StatusDoc { state: self.state, run: self.run, generations_done, generations: self.generations, progress, error: self.error.clone() }
    }

    /// Validates the current design as a start point and marks a new run as
    /// running. Returns the run number, the document and the control handle.
    pub fn start_run(&mut self, config: &OptimizerConfig) -> ApiResult<(u64, DesignDocument, Problem, Arc<RunControl>)> {
        if self.state == RunState::Running {
            return Err(ApiError::conflict("an optimization is already running in this session"));
        }
        if !(config.raster_res.is_finite() && config.raster_res > 0.0) {
            return Err(ApiError::unprocessable("raster_res must be positive"));
        }
        let (problem, x) = self.doc.to_problem()?;
        Context::new(&problem, config.clone())?.check_start(&x)?;
        let control = Arc::new(RunControl::default());
        self.run += 1;
        self.state = RunState::Running;
        self.generations = config.generations;
        self.control = Some(control.clone());
        self.error = None;
        Ok((self.run, self.doc.clone(), problem, control))
    }

    pub fn cancel_run(&mut self) -> ApiResult<()> {
        match (&self.control, self.state) {
            (Some(c), RunState::Running) => {
                c.cancel();
                Ok(())
            }
            _ => Err(ApiError::conflict("no optimization is running")),
        }
    }

    /// Records the end of run `run`.
    pub fn finish_run(&mut self, run: u64, problem: Problem, outcome: Result<RunDoc, RunError>) {
        if run != self.run {
            return;
        }
        self.finished = self.control.take().map_or(0, |c| c.generations_done());
        match outcome {
            Ok(result) => {
                self.state = RunState::Done;
                self.last = Some(Arc::new(Completed { run, problem, result }));
            }
            Err(RunError::Optimize(OptimizeError::Cancelled)) => self.state = RunState::Cancelled,
            Err(e) => {
                self.state = RunState::Failed;
                self.error = Some(e.to_string());
            }
        }
    }

    pub fn completed(&self) -> Option<Arc<Completed>> {
        self.last.clone()
    }

    pub fn run_doc(&self) -> ApiResult<&RunDoc> {
        self.last.as_ref().map(|c| &c.result).ok_or_else(|| ApiError::not_found("no completed run"))
    }

    pub fn select(&mut self, k: usize, t: Option<usize>) -> ApiResult<()> {
        let completed = self.last.clone().ok_or_else(|| ApiError::not_found("no suggestions yet"))?;
        let snap = completed.snapshot(k, t)?.clone();
        let (problem, _) = self.doc.to_problem()?;
        let violated = violated_rows(&problem, &snap.params);
        if !violated.is_empty() {
            return Err(ApiError::conflict("the snapshot violates constraints added since the run").with_details(violated));
        }
        self.doc = self.doc.with_values(&snap.params);
        self.selected = Some(Selected { completed, snapshot: snap });
        Ok(())
    }

    /// Appends fixed-length rows for the requested locks.
    pub fn lock(&mut self, req: &LockRequest) -> ApiResult<Vec<usize>> {
        let (_, x) = self.doc.to_problem()?;
        let names: Vec<String> = self.doc.parameters.iter().map(|p| p.name.clone()).collect();
        let mut targets: Vec<(usize, Option<f64>, String)> = Vec::new();
        for (i, l) in req.sizes.iter().enumerate() {
            let DesignDoc::Planks { planks } = &self.doc.design else {
                return Err(ApiError::unprocessable("size locks need a plank design; lock parameters instead").at(format!("sizes[{i}]")));
            };
            let p = planks
                .iter()
                .position(|p| p.name == l.part)
                .ok_or_else(|| ApiError::unprocessable(format!("unknown part `{}`", l.part)).at(format!("sizes[{i}].part")))?;
            let (a, b) = planks[p].normal.in_plane();
            let axis = match l.size {
                0 => a,
                1 => b,
                s => return Err(ApiError::unprocessable(format!("size must be 0 or 1 (got {s})")).at(format!("sizes[{i}].size"))),
            };
            targets.push((PlankDesign::length_var(p, axis), l.value, format!("sizes[{i}].value")));
        }
        for (i, l) in req.parameters.iter().enumerate() {
            let var = names
                .iter()
                .position(|n| *n == l.name)
                .ok_or_else(|| ApiError::unprocessable(format!("unknown parameter `{}`", l.name)).at(format!("parameters[{i}].name")))?;
            targets.push((var, l.value, format!("parameters[{i}].value")));
        }
        let mut doc = self.doc.clone();
        let mut rows = Vec::new();
        for (var, value, path) in targets {
            let target = value.unwrap_or(x[var]);
            if !((x[var] - target).abs() < EPS_RESIDUAL) {
                return Err(ApiError::unprocessable(format!(
                    "lock of `{}` to {target} is not satisfied by the current design ({})",
                    names[var], x[var]
                ))
                .at(path));
            }
            rows.push(doc.constraints.len());
            doc.constraints.push(ConstraintDoc { kind: ConstraintKind::FixedLength, terms: vec![(names[var].clone(), 1.0)], target });
        }
        doc.validate()?;
        self.doc = doc;
        Ok(rows)
    }

    pub fn edit(&mut self, req: &EditRequest) -> ApiResult<EditResponse> {
        let (problem, x) = self.doc.to_problem()?;
        if req.u.len() != x.len() {
            return Err(ApiError::unprocessable(format!("u has {} entries, the design has {} parameters", req.u.len(), x.len())).at("u"));
        }
        if req.u.iter().any(|v| !v.is_finite()) {
            return Err(ApiError::unprocessable("u must be finite").at("u"));
        }
        let (status, scale, candidate) = match req.mode {
            EditMode::Override => (EditStatus::Overridden, 1.0, x.iter().zip(&req.u).map(|(a, b)| a + b).collect::<Vec<_>>()),
            EditMode::Strict | EditMode::Flush => {
                let out = dynamic_effectiveness_constraints(&problem.design, &problem.system, &problem.spec, &x, &req.u, 0.0);
                let cand = out.result.apply(&x, &req.u);
                let valid = is_valid(&problem, &cand);
                if out.result.is_solved() && valid {
                    (EditStatus::Applied, out.result.scale, cand)
                } else if req.mode == EditMode::Flush && valid {
                    (EditStatus::Partial, out.result.scale, cand)
                } else {
                    (EditStatus::Rejected, out.result.scale, cand)
                }
            }
        };
        let response = diagnose(&problem, status, scale, candidate)?;
        if status == EditStatus::Rejected {
            return Err(ApiError::conflict("the edit cannot be corrected to a valid design").with_details(response));
        }
        self.doc = self.doc.with_values(&response.params.values);
        Ok(response)
    }

    pub fn layout(&self) -> ApiResult<LayoutDoc> {
        let (problem, res, replayed) = self.current_plan()?;
        Ok(replayed.layout_doc(&problem, res))
    }

    pub fn plan_svg(&self, board: usize) -> ApiResult<String> {
        let (problem, res, replayed) = self.current_plan()?;
        let mut svgs = replayed.svgs(&problem, res);
        if board >= svgs.len() {
            return Err(ApiError::not_found(format!("no board {board}")));
        }
        Ok(svgs.swap_remove(board))
    }

    /// The selected snapshot's layout while the design still matches it,
    /// otherwise the current design docked in part order.
    fn current_plan(&self) -> ApiResult<(Problem, f64, Replayed)> {
        let (problem, x) = self.doc.to_problem()?;
        if let Some(sel) = &self.selected {
            if sel.snapshot.params == x {
                let res = sel.completed.result.settings.raster_res;
                return Ok((problem.clone(), res, replay_snapshot(&problem, &sel.snapshot, res)?));
            }
        }
        let res = OptimizerConfig::default().raster_res;
        let replayed = dock_document(&problem, &x, res)?;
        Ok((problem, res, replayed))
    }
}

fn violated_rows(problem: &Problem, x: &[f64]) -> Vec<RowDiagnostic> {
    problem
        .system
        .violated_rows(x)
        .into_iter()
        .map(|(row, residual)| RowDiagnostic { row, kind: problem.system.rows[row].kind, residual })
        .collect()
}

fn is_valid(problem: &Problem, x: &[f64]) -> bool {
    problem.system.residual_norm(x) < EPS_RESIDUAL
        && problem.system.min_length_violations(x).is_empty()
        && (problem.spec.is_empty() || check_effectiveness(&problem.design, x, &problem.spec).is_ok_and(|v| v.ok))
}

fn diagnose(problem: &Problem, status: EditStatus, scale: f64, x: Vec<f64>) -> ApiResult<EditResponse> {
    let names = problem.design.param_names();
    let effectiveness = check_effectiveness(&problem.design, &x, &problem.spec).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    Ok(EditResponse {
        status,
        scale,
        violated_rows: violated_rows(problem, &x),
        min_length_violations: problem.system.min_length_violations(&x).into_iter().map(|i| names[i].clone()).collect(),
        effectiveness,
        params: DesignParams::new(names, x),
    })
}

impl ApiError {
    fn at(mut self, path: impl Into<String>) -> Self {
        self.body.path = Some(path.into());
        self
    }
}
