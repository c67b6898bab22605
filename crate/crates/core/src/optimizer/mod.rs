//! Wastage-driven search over design parameters and docking orderings.

mod search;
mod shrink;
mod suggest;

pub use search::{explore_orderings, grow_parts, improve_design, min_wastage, min_wastage_controlled, shrink_parts, ImproveOutcome, RunControl};
pub use shrink::{form_chains, gather_contacts, select_part_sizes_to_shrink, Contacts, ShrinkAxis};
pub use suggest::{plank_lengths, select_suggestions};

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::ConstraintSystem;
use crate::design::{Design, DesignError, DesignEvaluator, DesignParams, Orientation, Part, SizeModel, SizingError};
use crate::effectiveness::{check_effectiveness, dynamic_effectiveness_constraints, EffectivenessSpec};
use crate::layout::{docking_multi, BoardPx, DockingCriterion, Layout, LayoutError, MultiLayout, PartShapes, Placement, RasterError};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("start design violates its constraints (residual {0:e})")]
    InfeasibleStart(f64),
    #[error("start design is not effective")]
    IneffectiveStart,
    #[error("no board configured")]
    NoBoards,
    #[error("ordering is not a permutation of the parts")]
    BadOrdering,
    #[error("optimization cancelled")]
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub seed: u64,
    /// Restarts of the ordering exploration.
    pub generations: usize,
    /// Population size kept between generations.
    pub keep: usize,
    /// Grow/shrink rounds per design improvement.
    pub improve_iterations: usize,
    pub workers: usize,
    pub raster_res: f64,
    pub criterion: DockingCriterion,
    /// Safety bound on consecutive growth steps of one size.
    pub max_grow_steps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            generations: 3,
            keep: 8,
            improve_iterations: 20,
            workers: 8,
            raster_res: crate::layout::RASTER_RES_MM,
            criterion: DockingCriterion::WastageEnclosed,
            max_grow_steps: 2000,
        }
    }
}

/// Everything the search needs about a design.
#[derive(Debug, Clone)]
pub struct Problem {
    pub design: Design,
    pub system: ConstraintSystem,
    pub spec: EffectivenessSpec,
    /// Master boards `(width, height)` in mm; later boards take overflow.
    pub boards: Vec<[f64; 2]>,
}

/// A design with its rasterized parts and current layout.
#[derive(Debug, Clone)]
pub struct State {
    pub x: Vec<f64>,
    pub parts: Arc<Vec<Part>>,
    pub shapes: Arc<PartShapes>,
    pub layout: MultiLayout,
    pub orientations: Vec<Orientation>,
}

impl State {
    pub fn wastage(&self) -> f64 {
        self.layout.wastage()
    }

    fn with_layout(&self, layout: MultiLayout) -> State {
        let orientations = orientations_of(&layout, &self.orientations);
        State { x: self.x.clone(), parts: self.parts.clone(), shapes: self.shapes.clone(), layout, orientations }
    }

    pub fn snapshot(&self, order: &[usize]) -> Snapshot {
        Snapshot {
            params: self.x.clone(),
            wastage: self.wastage(),
            ordering: order.to_vec(),
            boards: self.layout.boards.iter().map(|b| b.placements().to_vec()).collect(),
        }
    }
}

fn orientations_of(layout: &MultiLayout, fallback: &[Orientation]) -> Vec<Orientation> {
    let mut o = fallback.to_vec();
    for (_, p) in layout.placements() {
        o[p.part] = p.orientation;
    }
    o
}

/// One step of an exploration path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub params: Vec<f64>,
    pub wastage: f64,
    pub ordering: Vec<usize>,
    /// Placements per board.
    pub boards: Vec<Vec<Placement>>,
}

#[derive(Debug, Clone)]
pub struct ExplorationResult {
    pub params: DesignParams,
    pub ordering: Vec<usize>,
    pub layout: MultiLayout,
    pub wastage: f64,
    pub path: Vec<Snapshot>,
}

/// Search context: the problem plus resolved configuration.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    pub problem: &'a Problem,
    pub config: OptimizerConfig,
    pub boards: Vec<BoardPx>,
}

impl<'a> Context<'a> {
    pub fn new(problem: &'a Problem, config: OptimizerConfig) -> Result<Self, OptimizeError> {
        if problem.boards.is_empty() {
            return Err(OptimizeError::NoBoards);
        }
        let boards = problem.boards.iter().map(|b| BoardPx::from_mm(b[0], b[1], config.raster_res)).collect();
        Ok(Self { problem, config, boards })
    }

    pub fn res(&self) -> f64 {
        self.config.raster_res
    }

    pub fn part_count(&self) -> usize {
        self.problem.design.part_count()
    }

    /// Per-task random stream derived from the master seed.
    pub fn rng(&self, generation: usize, kind: u64, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(((generation as u64) << 40) | (kind << 32) | index as u64);
        rng
    }

    fn shapes(&self, x: &[f64], prev: Option<&State>) -> Result<(Arc<Vec<Part>>, Arc<PartShapes>), OptimizeError> {
        let parts = self.problem.design.evaluate(x)?;
        let shapes = PartShapes::reusing(&parts, self.res(), prev.map(|s| (s.parts.as_slice(), s.shapes.as_ref())))?;
        Ok((Arc::new(parts), Arc::new(shapes)))
    }

    /// Docks `D(x)` under `order`; an overflow gives the empty layout.
    pub fn dock(&self, x: &[f64], order: &[usize], prev: Option<&State>) -> Result<State, OptimizeError> {
        let (parts, shapes) = self.shapes(x, prev)?;
        let layout = docking_multi(&shapes, order, &self.boards, self.config.criterion).unwrap_or_else(|_| MultiLayout::empty(&self.boards));
        let fallback = prev.map_or_else(|| vec![Orientation::R0; parts.len()], |p| p.orientations.clone());
        let orientations = orientations_of(&layout, &fallback);
        Ok(State { x: x.to_vec(), parts, shapes, layout, orientations })
    }

    /// Re-docks an existing state's parts under `order`.
    pub fn redock(&self, state: &State, order: &[usize]) -> State {
        let layout = docking_multi(&state.shapes, order, &self.boards, self.config.criterion).unwrap_or_else(|_| MultiLayout::empty(&self.boards));
        state.with_layout(layout)
    }

    /// `D(x)` slid from `prev`'s layout.
    pub fn slide_to(&self, x: Vec<f64>, prev: &State) -> Option<State> {
        let (parts, shapes) = self.shapes(&x, Some(prev)).ok()?;
        let layout = crate::layout::slide_boards(&prev.layout, &shapes);
        let orientations = orientations_of(&layout, &prev.orientations);
        Some(State { x, parts, shapes, layout, orientations })
    }

    /// Applies the edit `delta` with constraint and effectiveness correction.
    /// `None` when the corrected design is rejected.
    pub fn correct(&self, x: &[f64], delta: &[f64]) -> Option<Vec<f64>> {
        let p = self.problem;
        if p.spec.is_empty() {
            let r = p.system.correct(x, delta, &[]);
            return r.is_solved().then(|| r.apply(x, delta));
        }
        let out = dynamic_effectiveness_constraints(&p.design, &p.system, &p.spec, x, delta, 0.0);
        out.result.is_solved().then(|| out.result.apply(x, delta))
    }

    /// Moves material-space sizes by `target` (mm) to first order, then
    /// corrects.
    pub fn change_sizes(&self, model: &mut SizeModel, state: &State, target: &[f64]) -> Result<Option<Vec<f64>>, SizingError> {
        let change = model.change_part_sizes(&self.problem.design, &state.x, &state.orientations, target)?;
        Ok(self.correct(&state.x, &change.delta))
    }

    /// Number of sizes that move when size `s` alone is shrunk by a pixel.
    pub fn dependence(&self, model: &mut SizeModel, state: &State, s: usize) -> usize {
        let mut target = vec![0.0; 2 * self.part_count()];
        target[s] = -self.res();
        let Ok(Some(x)) = self.change_sizes(model, state, &target) else { return target.len() };
        let Ok(parts) = self.problem.design.evaluate(&x) else { return target.len() };
        let mut n = 0;
        for (i, (a, b)) in state.parts.iter().zip(&parts).enumerate() {
            let o = state.orientations[i];
            let (wa, ha) = crate::design::material_extents(a.lengths, o);
            let (wb, hb) = crate::design::material_extents(b.lengths, o);
            n += usize::from((wa - wb).abs() > 1e-9) + usize::from((ha - hb).abs() > 1e-9);
        }
        n.max(1)
    }

    /// Validates a start point against constraints and effectiveness.
    pub fn check_start(&self, x: &[f64]) -> Result<(), OptimizeError> {
        let p = self.problem;
        let r = p.system.residual_norm(x);
        if r >= crate::constraints::EPS_RESIDUAL || !p.system.min_length_violations(x).is_empty() {
            return Err(OptimizeError::InfeasibleStart(r));
        }
        if !p.spec.is_empty() && !check_effectiveness(&p.design, x, &p.spec)?.ok {
            return Err(OptimizeError::IneffectiveStart);
        }
        Ok(())
    }

    /// Rebuilds a snapshot's layout from scratch.
    pub fn replay(&self, snap: &Snapshot) -> Result<MultiLayout, OptimizeError> {
        let parts = self.problem.design.evaluate(&snap.params)?;
        let shapes = PartShapes::new(&parts, self.res())?;
        let boards = self
            .boards
            .iter()
            .zip(&snap.boards)
            .map(|(b, pl)| Layout::from_placements(b.width, b.height, pl, &shapes))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MultiLayout { boards })
    }
}
