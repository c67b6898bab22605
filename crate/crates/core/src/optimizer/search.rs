use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::shrink::select_part_sizes_to_shrink;
use super::{Context, ExplorationResult, OptimizeError, Snapshot, State};
use crate::design::{DesignEvaluator, DesignParams, SizeModel, SizingError};

/// Random pair swaps of `order`, `n²` of them, keeping a swap only when the
/// docking wastage drops. Returns the visited orderings (best first, at most
/// `keep`) with their wastage.
pub fn explore_orderings<R: Rng>(ctx: &Context, state: &State, order: &[usize], keep: usize, rng: &mut R) -> Vec<(Vec<usize>, f64)> {
    let n = order.len();
    let mut cur = order.to_vec();
    let mut cur_w = ctx.redock(state, &cur).wastage();
    let mut found = vec![(cur.clone(), cur_w)];
    if n >= 2 {
        for _ in 0..n * n {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            cur.swap(i, j);
            let w = ctx.redock(state, &cur).wastage();
            if w < cur_w {
                cur_w = w;
                found.push((cur.clone(), w));
            } else {
                cur.swap(i, j);
            }
        }
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out: Vec<(Vec<usize>, f64)> = Vec::new();
    for f in found {
        if !out.iter().any(|o| o.0 == f.0) {
            out.push(f);
        }
    }
    out.truncate(keep.max(1));
    out
}

/// One pixel of growth on size `s`, corrected, then slid.
fn grow_step(ctx: &Context, model: &mut SizeModel, e: &State, s: usize) -> Option<State> {
    let mut target = vec![0.0; 2 * ctx.part_count()];
    target[s] = ctx.res();
    let x = ctx.change_sizes(model, e, &target).ok()??;
    ctx.slide_to(x, e)
}

/// Grows part sizes one pixel at a time while wastage keeps dropping.
/// Returns the new best state.
pub fn grow_parts<R: Rng>(ctx: &Context, best: State, mut cur: State, order: &[usize], model: &mut SizeModel, rng: &mut R) -> State {
    let mut improvement = true;
    while improvement {
        improvement = false;
        let mut sizes: Vec<usize> = (0..2 * ctx.part_count()).collect();
        sizes.shuffle(rng);
        for s in sizes {
            let mut we = 1.0;
            let mut e = cur.clone();
            let mut best_e: Option<State> = None;
            for _ in 0..ctx.config.max_grow_steps {
                let Some(mut le) = grow_step(ctx, model, &e, s) else { break };
                if le.wastage() > we {
                    le = ctx.redock(&le, order);
                }
                if le.wastage() < we {
                    we = le.wastage();
                    best_e = Some(le.clone());
                    e = le;
                } else {
                    break;
                }
            }
            if we < cur.wastage() {
                cur = best_e.expect("improved growth recorded");
                improvement = true;
            }
        }
    }
    if cur.wastage() < best.wastage() {
        cur
    } else {
        best
    }
}

/// `x` with every selected size one pixel smaller, or `x` itself when
/// nothing is selected or the change is rejected.
pub fn shrink_parts<R: Rng>(ctx: &Context, best: &State, model: &mut SizeModel, rng: &mut R) -> Vec<f64> {
    let mut dep_model = model.clone();
    let mut dep = |s: usize| ctx.dependence(&mut dep_model, best, s);
    let selected = select_part_sizes_to_shrink(&best.layout, &best.shapes, &mut dep, rng);
    let mut target = vec![0.0; 2 * ctx.part_count()];
    for &s in &selected {
        target[s] = -ctx.res();
    }
    loop {
        if target.iter().all(|&t| t == 0.0) {
            return best.x.clone();
        }
        match ctx.change_sizes(model, best, &target) {
            Ok(Some(x)) => return x,
            Ok(None) => return best.x.clone(),
            Err(SizingError::NoInfluence { size }) => target[size] = 0.0,
            Err(SizingError::Design(_)) => return best.x.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImproveOutcome {
    pub best: State,
    /// Snapshots of every improvement, starting with the docked start.
    pub path: Vec<Snapshot>,
}

/// Alternates growth, shrinking and sliding on a fixed ordering.
pub fn improve_design<R: Rng>(ctx: &Context, start: &State, order: &[usize], rng: &mut R) -> ImproveOutcome {
    let mut model = SizeModel::default();
    let docked = ctx.redock(start, order);
    let mut best = docked.clone();
    let mut cur = docked;
    let mut path = vec![best.snapshot(order)];
    if best.layout.is_empty() {
        return ImproveOutcome { best, path };
    }
    for _ in 0..ctx.config.improve_iterations {
        let before = best.wastage();
        best = grow_parts(ctx, best, cur, order, &mut model, rng);
        let xc = shrink_parts(ctx, &best, &mut model, rng);
        cur = ctx.slide_to(xc, &best).unwrap_or_else(|| best.clone());
        if cur.wastage() < best.wastage() {
            best = cur.clone();
        }
        if best.wastage() < before {
            path.push(best.snapshot(order));
        }
    }
    ImproveOutcome { best, path }
}

#[derive(Debug, Clone)]
struct Member {
    state: State,
    order: Vec<usize>,
    path: Vec<Snapshot>,
}

fn same_design(a: &Member, b: &Member) -> bool {
    a.order == b.order && a.state.x.len() == b.state.x.len() && a.state.x.iter().zip(&b.state.x).all(|(p, q)| p.to_bits() == q.to_bits())
}

fn keep_bests(mut pop: Vec<Member>, k: usize) -> Vec<Member> {
    pop.sort_by(|a, b| a.state.wastage().total_cmp(&b.state.wastage()));
    let mut out: Vec<Member> = Vec::new();
    for m in pop {
        if out.len() == k {
            break;
        }
        if !out.iter().any(|o| same_design(o, &m)) {
            out.push(m);
        }
    }
    out
}

/// Shared progress counter and cancellation flag for a running search.
#[derive(Debug, Default)]
pub struct RunControl {
    generations_done: AtomicUsize,
    cancelled: AtomicBool,
}

impl RunControl {
    pub fn cancel(&self) {
        self.cancelled.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancelled.load(Ordering::SeqCst)
    }

    pub fn generations_done(&self) -> usize {
        self.generations_done.load(Ordering::SeqCst)
    }
}

const STREAM_ORDERINGS: u64 = 1;
const STREAM_IMPROVE: u64 = 2;

/// Generations of ordering exploration and design improvement from `x_s`.
/// Results are sorted by wastage; an empty list means nothing fits.
pub fn min_wastage(ctx: &Context, x_s: &[f64]) -> Result<Vec<ExplorationResult>, OptimizeError> {
    min_wastage_controlled(ctx, x_s, &RunControl::default())
}

/// [`min_wastage`] reporting finished generations to `control` and stopping
/// with [`OptimizeError::Cancelled`] once it is cancelled.
pub fn min_wastage_controlled(ctx: &Context, x_s: &[f64], control: &RunControl) -> Result<Vec<ExplorationResult>, OptimizeError> {
    ctx.check_start(x_s)?;
    let n = ctx.part_count();
    let identity: Vec<usize> = (0..n).collect();
    let start = ctx.dock(x_s, &identity, None)?;
    if start.layout.is_empty() && n > 0 {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(ctx.config.workers.max(1)).build().expect("thread pool");
    let keep = ctx.config.keep.max(1);
    let mut population = vec![Member { path: vec![start.snapshot(&identity)], state: start, order: identity }];

    for g in 0..ctx.config.generations {
        if control.is_cancelled() {
            return Err(OptimizeError::Cancelled);
        }
        let explored: Vec<Vec<(Vec<usize>, f64)>> = pool.install(|| {
            population
                .par_iter()
                .enumerate()
                .map(|(i, m)| explore_orderings(ctx, &m.state, &m.order, keep, &mut ctx.rng(g, STREAM_ORDERINGS, i)))
                .collect()
        });
        let tasks: Vec<(usize, Vec<usize>)> = explored.into_iter().enumerate().flat_map(|(i, os)| os.into_iter().map(move |(o, _)| (i, o))).collect();
        let improved: Vec<Member> = pool.install(|| {
            tasks
                .par_iter()
                .enumerate()
                .filter(|_| !control.is_cancelled())
                .map(|(k, (i, order))| {
                    let parent = &population[*i];
                    let out = improve_design(ctx, &parent.state, order, &mut ctx.rng(g, STREAM_IMPROVE, k));
                    let mut path = parent.path.clone();
                    path.extend(out.path);
                    Member { state: out.best, order: order.clone(), path }
                })
                .collect()
        });
        population.extend(improved.into_iter().filter(|m| !m.state.layout.is_empty()));
        if control.is_cancelled() {
            return Err(OptimizeError::Cancelled);
        }
        population = keep_bests(population, keep);
        control.generations_done.store(g + 1, Ordering::SeqCst);
    }

    let names = ctx.problem.design.param_names();
    let mut results: Vec<ExplorationResult> = population
        .into_iter()
        .map(|mut m| {
            let docked = ctx.redock(&m.state, &m.order);
            if docked.wastage() <= m.state.wastage() {
                m.state = docked;
            }
            let snap = m.state.snapshot(&m.order);
            if m.path.last() != Some(&snap) {
                m.path.push(snap);
            }
            ExplorationResult {
                params: DesignParams::new(names.clone(), m.state.x.clone()),
                ordering: m.order,
                wastage: m.state.wastage(),
                layout: m.state.layout,
                path: m.path,
            }
        })
        .collect();
    results.sort_by(|a, b| a.wastage.total_cmp(&b.wastage));
    Ok(results)
}
