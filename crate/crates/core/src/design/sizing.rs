//! Part-size gradients and first-order "change this size only" solves.
//!
//! Sizes are material-space extents: `s[2i] = w_i`, `s[2i+1] = h_i`, so the
//! gradient rows depend on each part's layout orientation.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{material_extents, DesignError, DesignEvaluator, Orientation};
use crate::linalg::lstsq;

/// Central finite-difference step.
pub const FD_STEP_MM: f64 = 0.1;
const SNAP: f64 = 1e-9;
const CACHE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SizingError {
    #[error("no parameter influences size {size}")]
    NoInfluence { size: usize },
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Result of a size-change solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeChange {
    /// New parameter values `X + Δ`.
    pub params: Vec<f64>,
    pub delta: Vec<f64>,
    /// First-order size change `G Δ`.
    pub predicted: Vec<f64>,
    /// Number of sizes the change touches (nonzero entries of `predicted`).
    pub dependence: usize,
    /// `‖G Δ − target‖`.
    pub residual: f64,
}

fn sizes(parts: &[super::Part], orientations: &[Orientation]) -> Vec<f64> {
    parts
        .iter()
        .zip(orientations)
        .flat_map(|(p, &o)| {
            let (w, h) = material_extents(p.lengths, o);
            [w, h]
        })
        .collect()
}

/// `G[i][j] = ∂s_i/∂x_j` by central differences with step `h`.
pub fn size_gradients(
    eval: &dyn DesignEvaluator,
    x: &[f64],
    orientations: &[Orientation],
    h: f64,
) -> Result<DMatrix<f64>, DesignError> {
    let n = eval.param_count();
    let m = 2 * eval.part_count();
    assert_eq!(orientations.len(), eval.part_count());
    let mut g = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        probe[j] = x[j] + h;
        let plus = sizes(&eval.evaluate(&probe)?, orientations);
        probe[j] = x[j] - h;
        let minus = sizes(&eval.evaluate(&probe)?, orientations);
        probe[j] = x[j];
        for i in 0..m {
            let d = (plus[i] - minus[i]) / (2.0 * h);
            g[(i, j)] = if d.abs() < SNAP { 0.0 } else { d };
        }
    }
    Ok(g)
}

/// Gradient cache plus the size-change solves built on it. One per worker.
#[derive(Debug, Clone)]
pub struct SizeModel {
    pub step: f64,
    cache: Option<(Vec<f64>, Vec<Orientation>, DMatrix<f64>)>,
}

impl Default for SizeModel {
    fn default() -> Self {
        Self::new(FD_STEP_MM)
    }
}

impl SizeModel {
    pub fn new(step: f64) -> Self {
        Self { step, cache: None }
    }

    pub fn gradients(
        &mut self,
        eval: &dyn DesignEvaluator,
        x: &[f64],
        orientations: &[Orientation],
    ) -> Result<&DMatrix<f64>, DesignError> {
        let hit = match &self.cache {
            Some((cx, co, _)) => {
                co.as_slice() == orientations
                    && cx.len() == x.len()
                    && cx.iter().zip(x).all(|(a, b)| (a - b).abs() < CACHE_EPS)
            }
            None => false,
        };
        if !hit {
            let g = size_gradients(eval, x, orientations, self.step)?;
            self.cache = Some((x.to_vec(), orientations.to_vec(), g));
        }
        Ok(&self.cache.as_ref().expect("cache filled").2)
    }

    /// Solves for `Δ` moving size `size` by `lambda` mm and leaving the other
    /// sizes unchanged to first order.
    pub fn change_part_size(
        &mut self,
        eval: &dyn DesignEvaluator,
        x: &[f64],
        orientations: &[Orientation],
        size: usize,
        lambda: f64,
    ) -> Result<SizeChange, SizingError> {
        let m = 2 * eval.part_count();
        let mut target = vec![0.0; m];
        target[size] = lambda;
        self.change_part_sizes(eval, x, orientations, &target)
    }

    /// Vector form: drive the size change toward `target` (length `2·parts`).
    pub fn change_part_sizes(
        &mut self,
        eval: &dyn DesignEvaluator,
        x: &[f64],
        orientations: &[Orientation],
        target: &[f64],
    ) -> Result<SizeChange, SizingError> {
        let g = self.gradients(eval, x, orientations)?;
        solve_size_change(g, x, target)
    }
}

pub(crate) fn solve_size_change(g: &DMatrix<f64>, x: &[f64], target: &[f64]) -> Result<SizeChange, SizingError> {
    assert_eq!(target.len(), g.nrows());
    for (i, &t) in target.iter().enumerate() {
        if t != 0.0 && g.row(i).iter().all(|&v| v == 0.0) {
            return Err(SizingError::NoInfluence { size: i });
        }
    }
    let b = DVector::from_column_slice(target);
    let sol = lstsq(g, &b);
    let predicted = g * &sol.x;
    let residual = (&predicted - &b).norm();
    let delta: Vec<f64> = sol.x.iter().map(|&d| if d.abs() < 1e-14 { 0.0 } else { d }).collect();
    let params = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
    let predicted: Vec<f64> = predicted.iter().copied().collect();
    let dependence = predicted.iter().filter(|v| v.abs() > SNAP).count();
    Ok(SizeChange { params, delta, predicted, dependence, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{Affine, Axis, ParametricDesign, ParametricPart};

    fn rect_part(name: &str, w: Affine, h: Affine) -> ParametricPart {
        let z = Affine::constant(0.0);
        ParametricPart {
            name: name.into(),
            normal: Axis::Z,
            center: [z.clone(), z.clone(), z.clone()],
            contour: vec![[z.clone(), z.clone()], [w.clone(), z.clone()], [w, h.clone()], [z, h]],
        }
    }

    fn design(names: &[&str], parts: Vec<ParametricPart>) -> ParametricDesign {
        ParametricDesign { names: names.iter().map(|s| s.to_string()).collect(), parts, thickness: 3.0 }
    }

    #[test]
    fn direct_parameter_has_unit_gradient() {
        let d = design(&["lx"], vec![rect_part("a", Affine::var(0), Affine::constant(5.0))]);
        let g = size_gradients(&d, &[100.0], &[Orientation::R0], FD_STEP_MM).unwrap();
        assert_eq!(g.shape(), (2, 1));
        assert!((g[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(g[(1, 0)], 0.0);
        // Orientation swaps rows.
        let g = size_gradients(&d, &[100.0], &[Orientation::R90], FD_STEP_MM).unwrap();
        assert_eq!(g[(0, 0)], 0.0);
        assert!((g[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inert_parameter_gives_zero_column() {
        let d = design(&["lx", "unused"], vec![rect_part("a", Affine::var(0), Affine::constant(5.0))]);
        let g = size_gradients(&d, &[10.0, 3.0], &[Orientation::R0], FD_STEP_MM).unwrap();
        assert!(g.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_parameter_change_is_exact() {
        let d = design(&["lx"], vec![rect_part("a", Affine::var(0), Affine::constant(5.0))]);
        let mut m = SizeModel::default();
        let c = m.change_part_size(&d, &[100.0], &[Orientation::R0], 0, 0.5).unwrap();
        assert!((c.params[0] - 100.5).abs() < 1e-12);
        assert_eq!(c.dependence, 1);
    }

    #[test]
    fn shared_parameter_splits_least_squares() {
        // Two legs of height h: target (+1, 0) on their widths (both = h) → δ = 0.5.
        let h = Affine::var(0);
        let d = design(
            &["h"],
            vec![rect_part("l0", h.clone(), Affine::constant(10.0)), rect_part("l1", h, Affine::constant(10.0))],
        );
        let mut m = SizeModel::default();
        let c = m.change_part_size(&d, &[50.0], &[Orientation::R0; 2], 0, 1.0).unwrap();
        // Hand oracle: normal equations [1 1]·[1 1]ᵀ δ = [1 1]·[1 0]ᵀ → 2δ = 1.
        assert!((c.delta[0] - 0.5).abs() < 1e-12);
        assert!((c.predicted[0] - 0.5).abs() < 1e-12 && (c.predicted[2] - 0.5).abs() < 1e-12);
        assert_eq!(c.dependence, 2);
        assert!((c.residual - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_no_influence() {
        let d = design(&["lx"], vec![rect_part("a", Affine::var(0), Affine::constant(5.0))]);
        let mut m = SizeModel::default();
        let e = m.change_part_size(&d, &[10.0], &[Orientation::R0], 1, 0.5).unwrap_err();
        assert_eq!(e, SizingError::NoInfluence { size: 1 });
    }

    #[test]
    fn zero_target_leaves_params() {
        let d = design(&["a", "b"], vec![rect_part("p", Affine::var(0), Affine::var(1))]);
        let mut m = SizeModel::default();
        let c = m.change_part_sizes(&d, &[10.0, 20.0], &[Orientation::R0], &[0.0, 0.0]).unwrap();
        assert_eq!(c.params, vec![10.0, 20.0]);
    }

    #[test]
    fn independent_shrink_moves_each_parameter_by_one_pixel() {
        let d = design(
            &["a", "b"],
            vec![rect_part("p", Affine::var(0), Affine::constant(5.0)), rect_part("q", Affine::var(1), Affine::constant(5.0))],
        );
        let mut m = SizeModel::default();
        let c = m.change_part_sizes(&d, &[10.0, 20.0], &[Orientation::R0; 2], &[-0.5, 0.0, -0.5, 0.0]).unwrap();
        assert!((c.params[0] - 9.5).abs() < 1e-12 && (c.params[1] - 19.5).abs() < 1e-12);
    }

    #[test]
    fn coupled_contradiction_matches_dense_solve() {
        // Sizes w0 = a, w1 = a + b, h's constant. Ask w0 += 1, w1 += 0 → over-determined in a.
        let a = Affine::var(0);
        let ab = Affine::var(0).add_scaled(&Affine::var(1), 1.0);
        let d = design(&["a", "b"], vec![rect_part("p", a, Affine::constant(5.0)), rect_part("q", ab, Affine::constant(5.0))]);
        let mut m = SizeModel::default();
        let target = [1.0, 0.0, 0.0, 0.0];
        let c = m.change_part_sizes(&d, &[10.0, 10.0], &[Orientation::R0; 2], &target).unwrap();
        // Dense oracle: G = [[1,0],[0,0],[1,1],[0,0]] is full column rank; exact solve δ = (1, −1).
        assert!((c.delta[0] - 1.0).abs() < 1e-9 && (c.delta[1] + 1.0).abs() < 1e-9);
        // Now a genuinely contradictory pair: two sizes both equal to `a`, opposite targets.
        let d2 = design(&["a"], vec![rect_part("p", Affine::var(0), Affine::constant(5.0)), rect_part("q", Affine::var(0), Affine::constant(5.0))]);
        let c2 = m.change_part_sizes(&d2, &[10.0], &[Orientation::R0; 2], &[1.0, 0.0, -3.0, 0.0]).unwrap();
        let g = DMatrix::from_row_slice(4, 1, &[1.0, 0.0, 1.0, 0.0]);
        let oracle = (g.transpose() * &g).try_inverse().unwrap() * g.transpose() * DVector::from_vec(vec![1.0, 0.0, -3.0, 0.0]);
        assert!((c2.delta[0] - oracle[0]).abs() < 1e-9);
        assert!((c2.residual - 8.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn least_norm_beats_grid_enumeration() {
        // Under-constrained: w = a + b. Any Δ with Δa + Δb = λ achieves the target.
        let ab = Affine::var(0).add_scaled(&Affine::var(1), 1.0);
        let d = design(&["a", "b"], vec![rect_part("p", ab, Affine::constant(5.0))]);
        let mut m = SizeModel::default();
        let lambda = 0.8;
        let c = m.change_part_size(&d, &[10.0, 10.0], &[Orientation::R0], 0, lambda).unwrap();
        let norm = (c.delta[0].powi(2) + c.delta[1].powi(2)).sqrt();
        let mut best = f64::INFINITY;
        for i in -200..=200 {
            for j in -200..=200 {
                let (da, db) = (i as f64 * 0.01, j as f64 * 0.01);
                if (da + db - lambda).abs() < 1e-9 {
                    best = best.min((da * da + db * db).sqrt());
                }
            }
        }
        assert!(norm <= best + 1e-12, "{norm} > {best}");
    }

    #[test]
    fn cache_is_reused_until_params_move() {
        let d = design(&["lx"], vec![rect_part("a", Affine::var(0), Affine::constant(5.0))]);
        let mut m = SizeModel::default();
        let p1 = m.gradients(&d, &[10.0], &[Orientation::R0]).unwrap() as *const _;
        let p2 = m.gradients(&d, &[10.0 + 1e-14], &[Orientation::R0]).unwrap() as *const _;
        assert_eq!(p1, p2);
        m.gradients(&d, &[11.0], &[Orientation::R0]).unwrap();
        assert!((m.cache.as_ref().unwrap().0[0] - 11.0).abs() < 1e-15);
    }
}
