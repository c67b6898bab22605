//! Voxelized hexahedral finite elements for plank sag detection.
//!
//! Units: millimetres, newtons, megapascals.

pub mod element;
mod sag;
pub mod sparse;

pub use sag::{detect_sagging, PlankSag, SagReport, SAG_SAMPLES};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{polygon_area, Part};
use element::{body_force, corner, hex8_stiffness};
use sparse::{conjugate_gradient, CsrMatrix};

/// Soft density floor keeping void regions from making `K` singular.
pub const RHO_MIN: f64 = 1e-4;
pub const DEFAULT_ELEMENT_SIZE: f64 = 10.0;
pub const DEFAULT_SAG_THRESHOLD: f64 = 0.2;
const CG_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("no fixed nodes: the stiffness system is singular")]
    SingularSystem,
    #[error("conjugate gradient did not converge ({iterations} iterations, relative residual {residual:e})")]
    SolveFailed { iterations: usize, residual: f64 },
    #[error("nothing to voxelize")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Material {
    pub youngs_mpa: f64,
    pub poisson: f64,
    pub density_kg_m3: f64,
    pub gravity_m_s2: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self { youngs_mpa: 3000.0, poisson: 0.3, density_kg_m3: 700.0, gravity_m_s2: 9.81 }
    }
}

impl Material {
    /// Self-weight per mm³ in newtons.
    pub fn weight_density(&self) -> f64 {
        self.density_kg_m3 * 1e-9 * self.gravity_m_s2
    }
}

/// A force applied to one part, spread over its volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartLoad {
    pub part: usize,
    pub force_n: f64,
    pub direction: [f64; 3],
}

/// Load case and analysis settings for sag detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadSpec {
    pub gravity: bool,
    pub loads: Vec<PartLoad>,
    pub material: Material,
    pub element_size_mm: f64,
    pub threshold_mm: f64,
}

impl Default for LoadSpec {
    fn default() -> Self {
        Self {
            gravity: true,
            loads: Vec::new(),
            material: Material::default(),
            element_size_mm: DEFAULT_ELEMENT_SIZE,
            threshold_mm: DEFAULT_SAG_THRESHOLD,
        }
    }
}

/// Regular grid of cubic elements with per-element density in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub origin: [f64; 3],
    pub element_size: f64,
    pub dims: [usize; 3],
    pub rho: Vec<f64>,
}

impl DensityGrid {
    /// Empty grid covering `[lo, hi]` plus one element of padding, with the
    /// origin on a multiple of the element size.
    pub fn covering(lo: [f64; 3], hi: [f64; 3], h: f64) -> Self {
        let mut origin = [0.0; 3];
        let mut dims = [0; 3];
        for k in 0..3 {
            let a = (lo[k] / h).floor() - 1.0;
            let b = (hi[k] / h).ceil() + 1.0;
            origin[k] = a * h;
            dims[k] = (b - a).max(1.0) as usize;
        }
        Self { origin, element_size: h, dims, rho: vec![0.0; dims[0] * dims[1] * dims[2]] }
    }

    pub fn element_count(&self) -> usize {
        self.rho.len()
    }

    pub fn element_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn node_dims(&self) -> [usize; 3] {
        [self.dims[0] + 1, self.dims[1] + 1, self.dims[2] + 1]
    }

    pub fn node_count(&self) -> usize {
        let n = self.node_dims();
        n[0] * n[1] * n[2]
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.node_dims();
        i + n[0] * (j + n[1] * k)
    }

    pub fn node_coords(&self, node: usize) -> [usize; 3] {
        let n = self.node_dims();
        [node % n[0], (node / n[0]) % n[1], node / (n[0] * n[1])]
    }

    pub fn node_position(&self, node: usize) -> [f64; 3] {
        let c = self.node_coords(node);
        [0, 1, 2].map(|k| self.origin[k] + c[k] as f64 * self.element_size)
    }

    /// Global node indices of element `(i, j, k)` in local corner order.
    pub fn element_nodes(&self, i: usize, j: usize, k: usize) -> [usize; 8] {
        std::array::from_fn(|a| {
            let c = corner(a);
            self.node_index(i + c[0], j + c[1], k + c[2])
        })
    }

    fn element_range(&self, lo: f64, hi: f64, axis: usize) -> std::ops::Range<usize> {
        let h = self.element_size;
        let a = ((lo - self.origin[axis]) / h).floor().max(0.0) as usize;
        let b = (((hi - self.origin[axis]) / h).ceil().max(0.0) as usize).min(self.dims[axis]);
        a.min(b)..b
    }

    /// Nodes within `h/2` of `z = 0` touching an element of positive density.
    pub fn ground_nodes(&self) -> Vec<usize> {
        let h = self.element_size;
        let mut fixed = vec![false; self.node_count()];
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    if self.rho[self.element_index(i, j, k)] <= 0.0 {
                        continue;
                    }
                    for n in self.element_nodes(i, j, k) {
                        if self.node_position(n)[2].abs() <= h / 2.0 {
                            fixed[n] = true;
                        }
                    }
                }
            }
        }
        fixed.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    }
}

fn interval_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Area of `poly ∩ [x0,x1]×[y0,y1]` by Sutherland–Hodgman clipping.
pub fn clipped_area(poly: &[[f64; 2]], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut out: Vec<[f64; 2]> = poly.to_vec();
    let edges: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, bound, keep_above) in edges {
        if out.is_empty() {
            break;
        }
        let inside = |p: &[f64; 2]| if keep_above { p[axis] >= bound } else { p[axis] <= bound };
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    polygon_area(&out).abs()
}

/// Exact volume fraction of each element covered by `part`.
pub fn part_fractions(part: &Part, grid: &DensityGrid) -> Vec<(usize, f64)> {
    let (lo, hi) = part.world_box();
    let h = grid.element_size;
    let n = part.normal.index();
    let (a, b) = part.normal.in_plane();
    let (a, b) = (a.index(), b.index());
    let full_rect = part.contour.len() == 4
        && (part.contour_area() - part.lengths[0] * part.lengths[1]).abs() <= 1e-9 * part.lengths[0] * part.lengths[1];
    let ranges = [grid.element_range(lo[0], hi[0], 0), grid.element_range(lo[1], hi[1], 1), grid.element_range(lo[2], hi[2], 2)];
    let mut out = Vec::new();
    for k in ranges[2].clone() {
        for j in ranges[1].clone() {
            for i in ranges[0].clone() {
                let idx = [i, j, k];
                let e0: [f64; 3] = std::array::from_fn(|m| grid.origin[m] + idx[m] as f64 * h);
                let depth = interval_overlap(lo[n], hi[n], e0[n], e0[n] + h);
                if depth <= 0.0 {
                    continue;
                }
                let area = if full_rect {
                    interval_overlap(lo[a], hi[a], e0[a], e0[a] + h) * interval_overlap(lo[b], hi[b], e0[b], e0[b] + h)
                } else {
                    let (x0, y0) = (e0[a] - lo[a], e0[b] - lo[b]);
                    clipped_area(&part.contour, x0, x0 + h, y0, y0 + h)
                };
                let f = depth * area / (h * h * h);
                if f > 0.0 {
                    out.push((grid.element_index(i, j, k), f));
                }
            }
        }
    }
    out
}

/// Density grid of the union of `parts`; overlaps are clamped to 1.
pub fn voxelize(parts: &[Part], element_size: f64) -> Result<DensityGrid, FemError> {
    if parts.is_empty() {
        return Err(FemError::EmptyGrid);
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in parts {
        let (a, b) = p.world_box();
        for k in 0..3 {
            lo[k] = lo[k].min(a[k]);
            hi[k] = hi[k].max(b[k]);
        }
    }
    lo[2] = lo[2].min(0.0);
    let mut grid = DensityGrid::covering(lo, hi, element_size);
    for p in parts {
        for (e, f) in part_fractions(p, &grid) {
            grid.rho[e] += f;
        }
    }
    for r in &mut grid.rho {
        *r = r.clamp(0.0, 1.0);
    }
    Ok(grid)
}

/// Global stiffness restricted to free degrees of freedom.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    pub k: CsrMatrix,
    /// Full DOF (3·node + axis) → free DOF index.
    pub dof_map: Vec<Option<usize>>,
    pub fixed_nodes: Vec<usize>,
}

pub fn assemble_stiffness(grid: &DensityGrid, material: &Material, fixed_nodes: &[usize]) -> Result<StiffnessSystem, FemError> {
    if grid.element_count() == 0 {
        return Err(FemError::EmptyGrid);
    }
    if fixed_nodes.is_empty() {
        return Err(FemError::SingularSystem);
    }
    let nn = grid.node_count();
    let mut is_fixed = vec![false; nn];
    for &n in fixed_nodes {
        is_fixed[n] = true;
    }
    let mut dof_map = vec![None; 3 * nn];
    let mut free = 0;
    for n in 0..nn {
        if !is_fixed[n] {
            for c in 0..3 {
                dof_map[3 * n + c] = Some(free);
                free += 1;
            }
        }
    }
    let nd = grid.node_dims();
    let mut rows = Vec::with_capacity(free);
    for n in 0..nn {
        if is_fixed[n] {
            continue;
        }
        let [i, j, k] = grid.node_coords(n);
        let mut cols = Vec::with_capacity(81);
        for kk in k.saturating_sub(1)..=(k + 1).min(nd[2] - 1) {
            for jj in j.saturating_sub(1)..=(j + 1).min(nd[1] - 1) {
                for ii in i.saturating_sub(1)..=(i + 1).min(nd[0] - 1) {
                    let m = grid.node_index(ii, jj, kk);
                    for c in 0..3 {
                        if let Some(d) = dof_map[3 * m + c] {
                            cols.push(d);
                        }
                    }
                }
            }
        }
        for _ in 0..3 {
            rows.push(cols.clone());
        }
    }
    let mut k = CsrMatrix::from_pattern(rows);
    let kc = hex8_stiffness(grid.element_size, material.youngs_mpa, material.poisson);
    for ek in 0..grid.dims[2] {
        for ej in 0..grid.dims[1] {
            for ei in 0..grid.dims[0] {
                let rho = grid.rho[grid.element_index(ei, ej, ek)].max(RHO_MIN);
                let nodes = grid.element_nodes(ei, ej, ek);
                for a in 0..24 {
                    let Some(ra) = dof_map[3 * nodes[a / 3] + a % 3] else { continue };
                    for b in 0..24 {
                        let Some(cb) = dof_map[3 * nodes[b / 3] + b % 3] else { continue };
                        k.add(ra, cb, rho * kc[(a, b)]);
                    }
                }
            }
        }
    }
    Ok(StiffnessSystem { k, dof_map, fixed_nodes: fixed_nodes.to_vec() })
}

/// Full-length nodal force vector (3 per node) for the load case.
pub fn load_vector(grid: &DensityGrid, parts: &[Part], spec: &LoadSpec) -> Vec<f64> {
    let mut f = vec![0.0; 3 * grid.node_count()];
    let h = grid.element_size;
    let add_element = |f: &mut Vec<f64>, e: usize, per_volume: [f64; 3]| {
        let ek = e / (grid.dims[0] * grid.dims[1]);
        let ej = (e / grid.dims[0]) % grid.dims[1];
        let ei = e % grid.dims[0];
        let fe = body_force(h, per_volume);
        for (a, n) in grid.element_nodes(ei, ej, ek).into_iter().enumerate() {
            for c in 0..3 {
                f[3 * n + c] += fe[3 * a + c];
            }
        }
    };
    if spec.gravity {
        let w = spec.material.weight_density();
        for e in 0..grid.element_count() {
            if grid.rho[e] > 0.0 {
                add_element(&mut f, e, [0.0, 0.0, -w * grid.rho[e]]);
            }
        }
    }
    for load in &spec.loads {
        let Some(part) = parts.get(load.part) else { continue };
        let fr = part_fractions(part, grid);
        let total: f64 = fr.iter().map(|x| x.1).sum::<f64>() * h * h * h;
        let len = load.direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if total <= 0.0 || len == 0.0 {
            continue;
        }
        for (e, frac) in fr {
            let s = load.force_n / total * frac;
            add_element(&mut f, e, load.direction.map(|d| d / len * s));
        }
    }
    f
}

/// Nodal displacements on a density grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub origin: [f64; 3],
    pub element_size: f64,
    pub node_dims: [usize; 3],
    pub u: Vec<[f64; 3]>,
    pub fixed_nodes: Vec<usize>,
}

impl DisplacementField {
    pub fn zeros(grid: &DensityGrid) -> Self {
        Self {
            origin: grid.origin,
            element_size: grid.element_size,
            node_dims: grid.node_dims(),
            u: vec![[0.0; 3]; grid.node_count()],
            fixed_nodes: Vec::new(),
        }
    }

    /// Field sampled from a function of node positions.
    pub fn from_fn(grid: &DensityGrid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for n in 0..grid.node_count() {
            out.u[n] = f(grid.node_position(n));
        }
        out
    }

    /// Trilinear interpolation, clamped to the grid.
    pub fn at(&self, p: [f64; 3]) -> [f64; 3] {
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        for k in 0..3 {
            let cells = self.node_dims[k] - 1;
            let s = ((p[k] - self.origin[k]) / self.element_size).clamp(0.0, cells as f64);
            let i = (s.floor() as usize).min(cells.saturating_sub(1));
            base[k] = i;
            t[k] = s - i as f64;
        }
        let mut out = [0.0; 3];
        for a in 0..8 {
            let c = corner(a);
            let idx = [0, 1, 2].map(|k| (base[k] + c[k]).min(self.node_dims[k] - 1));
            let w: f64 = (0..3).map(|k| if c[k] == 1 { t[k] } else { 1.0 - t[k] }).product();
            let n = idx[0] + self.node_dims[0] * (idx[1] + self.node_dims[1] * idx[2]);
            for m in 0..3 {
                out[m] += w * self.u[n][m];
            }
        }
        out
    }
}

pub fn solve_displacements(grid: &DensityGrid, system: &StiffnessSystem, f_full: &[f64]) -> Result<DisplacementField, FemError> {
    let n = system.k.n;
    let mut b = vec![0.0; n];
    for (dof, m) in system.dof_map.iter().enumerate() {
        if let Some(i) = m {
            b[*i] = f_full[dof];
        }
    }
    let max_iter = (10 * n).max(1000);
    let (x, out) = conjugate_gradient(&system.k, &b, CG_TOLERANCE, max_iter);
    if !out.converged {
        return Err(FemError::SolveFailed { iterations: out.iterations, residual: out.relative_residual });
    }
    let mut field = DisplacementField::zeros(grid);
    for (dof, m) in system.dof_map.iter().enumerate() {
        if let Some(i) = m {
            field.u[dof / 3][dof % 3] = x[*i];
        }
    }
    field.fixed_nodes = system.fixed_nodes.clone();
    Ok(field)
}

/// Voxelize, fix to the ground, solve, and classify every part.
pub fn analyze_sag(parts: &[Part], spec: &LoadSpec) -> Result<SagReport, FemError> {
    let grid = voxelize(parts, spec.element_size_mm)?;
    let fixed = grid.ground_nodes();
    let system = assemble_stiffness(&grid, &spec.material, &fixed)?;
    let f = load_vector(&grid, parts, spec);
    let field = solve_displacements(&grid, &system, &f)?;
    Ok(detect_sagging(&field, parts, spec.threshold_mm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Axis;

    fn plank(normal: Axis, center: [f64; 3], lengths: [f64; 2], thickness: f64) -> Part {
        Part {
            id: 0,
            name: "p".into(),
            contour: vec![[0.0, 0.0], [lengths[0], 0.0], [lengths[0], lengths[1]], [0.0, lengths[1]]],
            center,
            lengths,
            thickness,
            normal,
        }
    }

    #[test]
    fn element_inside_plank_is_full() {
        let g = voxelize(&[plank(Axis::Z, [50.0, 50.0, 50.0], [100.0, 100.0], 100.0)], 10.0).unwrap();
        let idx = g.element_index(5, 5, 5);
        assert_eq!(g.rho[idx], 1.0);
        assert_eq!(g.rho[0], 0.0);
    }

    #[test]
    fn thin_plank_gives_fractional_density() {
        // 3 mm plank from z = 21 to 24 inside the element [20, 30].
        let g = voxelize(&[plank(Axis::Z, [15.0, 15.0, 22.5], [30.0, 30.0], 3.0)], 10.0).unwrap();
        let origin_k = (g.origin[2] / 10.0) as i64;
        let k = (2 - origin_k) as usize;
        let i = (1.0 - g.origin[0] / 10.0) as usize;
        let r = g.rho[g.element_index(i, i, k)];
        assert!((r - 0.3).abs() < 1e-12, "{r}");
    }

    #[test]
    fn voxelization_conserves_volume() {
        let mut tri = plank(Axis::Y, [3.0, 7.0, 40.0], [73.0, 55.0], 3.0);
        tri.contour = vec![[0.0, 0.0], [73.0, 0.0], [0.0, 55.0]];
        let parts = [plank(Axis::X, [12.3, 40.0, 33.0], [80.0, 66.0], 3.0), tri.clone()];
        let g = voxelize(&parts, 10.0).unwrap();
        let vol: f64 = g.rho.iter().sum::<f64>() * 1000.0;
        let exact = 80.0 * 66.0 * 3.0 + tri.contour_area() * 3.0;
        assert!((vol - exact).abs() / exact < 0.02, "{vol} vs {exact}");
    }

    #[test]
    fn clipped_area_of_concave_polygon() {
        // L-shape: 2×2 square minus the top-right unit square.
        let l = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        assert!((clipped_area(&l, 0.0, 2.0, 0.0, 2.0) - 3.0).abs() < 1e-12);
        assert!((clipped_area(&l, 1.0, 2.0, 1.0, 2.0)).abs() < 1e-12);
        assert!((clipped_area(&l, 0.5, 1.5, 0.5, 1.5) - 0.75).abs() < 1e-12);
    }

    fn single_cube() -> DensityGrid {
        DensityGrid { origin: [0.0; 3], element_size: 10.0, dims: [1, 1, 1], rho: vec![1.0] }
    }

    #[test]
    fn single_element_with_no_fixed_nodes_is_singular() {
        let err = assemble_stiffness(&single_cube(), &Material::default(), &[]).unwrap_err();
        assert_eq!(err, FemError::SingularSystem);
    }

    #[test]
    fn stiffness_scales_with_density() {
        let mut g = DensityGrid::covering([0.0; 3], [20.0, 20.0, 20.0], 10.0);
        g.rho.iter_mut().for_each(|r| *r = 1.0);
        let fixed = g.ground_nodes();
        let full = assemble_stiffness(&g, &Material::default(), &fixed).unwrap();
        g.rho.iter_mut().for_each(|r| *r = 0.5);
        let half = assemble_stiffness(&g, &Material::default(), &fixed).unwrap();
        for (a, b) in full.k.vals.iter().zip(&half.k.vals) {
            assert!((0.5 * a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn single_element_full_matrix_equals_element_matrix() {
        let g = single_cube();
        // Fixing node 0 removes its three DOFs; the rest is K_c verbatim.
        let sys = assemble_stiffness(&g, &Material::default(), &[0]).unwrap();
        let kc = hex8_stiffness(10.0, 3000.0, 0.3);
        for a in 3..24 {
            for b in 3..24 {
                assert!((sys.k.get(a - 3, b - 3) - kc[(a, b)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fixed_stiffness_is_positive_definite() {
        let g = voxelize(&[plank(Axis::X, [0.0, 20.0, 15.0], [40.0, 30.0], 10.0)], 10.0).unwrap();
        let sys = assemble_stiffness(&g, &Material::default(), &g.ground_nodes()).unwrap();
        let dense = sys.k.to_dense();
        assert!((&dense - dense.transpose()).amax() < 1e-9 * dense.amax());
        assert!(dense.cholesky().is_some());
    }

    #[test]
    fn zero_load_gives_zero_displacement() {
        let g = voxelize(&[plank(Axis::Z, [0.0, 0.0, 5.0], [20.0, 20.0], 10.0)], 10.0).unwrap();
        let sys = assemble_stiffness(&g, &Material::default(), &g.ground_nodes()).unwrap();
        let f = vec![0.0; 3 * g.node_count()];
        let u = solve_displacements(&g, &sys, &f).unwrap();
        assert!(u.u.iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn cube_under_top_load_matches_dense_solve() {
        // 2×2×1 elements: 3×3×2 = 18 nodes, bottom face fixed.
        let mut g = DensityGrid { origin: [0.0; 3], element_size: 10.0, dims: [2, 2, 1], rho: vec![1.0; 4] };
        g.rho[3] = 0.7;
        let fixed: Vec<usize> = (0..9).collect();
        let sys = assemble_stiffness(&g, &Material::default(), &fixed).unwrap();
        let mut f = vec![0.0; 3 * g.node_count()];
        for n in 9..18 {
            f[3 * n + 2] = -1.0;
        }
        let u = solve_displacements(&g, &sys, &f).unwrap();
        let mut b = nalgebra::DVector::zeros(sys.k.n);
        for (dof, m) in sys.dof_map.iter().enumerate() {
            if let Some(i) = m {
                b[*i] = f[dof];
            }
        }
        let dense = sys.k.to_dense().cholesky().unwrap().solve(&b);
        for (dof, m) in sys.dof_map.iter().enumerate() {
            if let Some(i) = m {
                assert!((u.u[dof / 3][dof % 3] - dense[*i]).abs() < 1e-6 * dense.amax());
            }
        }
        for n in 0..9 {
            assert_eq!(u.u[n], [0.0; 3]);
        }
    }

    #[test]
    fn doubling_load_doubles_displacement() {
        let parts = [plank(Axis::Z, [40.0, 10.0, 35.0], [80.0, 20.0], 10.0), plank(Axis::X, [5.0, 10.0, 15.0], [20.0, 30.0], 10.0)];
        let g = voxelize(&parts, 10.0).unwrap();
        let sys = assemble_stiffness(&g, &Material::default(), &g.ground_nodes()).unwrap();
        let f = load_vector(&g, &parts, &LoadSpec::default());
        let f2: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let u1 = solve_displacements(&g, &sys, &f).unwrap();
        let u2 = solve_displacements(&g, &sys, &f2).unwrap();
        let max = u1.u.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in u1.u.iter().zip(&u2.u) {
            for k in 0..3 {
                assert!((2.0 * a[k] - b[k]).abs() <= 1e-6 * max);
            }
        }
    }

    #[test]
    fn gravity_load_matches_part_weight() {
        let parts = [plank(Axis::Z, [0.0, 0.0, 50.0], [100.0, 60.0], 3.0)];
        let g = voxelize(&parts, 10.0).unwrap();
        let f = load_vector(&g, &parts, &LoadSpec::default());
        let fz: f64 = (0..g.node_count()).map(|n| f[3 * n + 2]).sum();
        let expected = -100.0 * 60.0 * 3.0 * Material::default().weight_density();
        assert!((fz - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn trilinear_interpolation_is_exact_for_affine_fields() {
        let g = DensityGrid::covering([0.0; 3], [30.0, 30.0, 30.0], 10.0);
        let f = |p: [f64; 3]| [0.1 * p[0] - 0.2 * p[2] + 1.0, 0.3 * p[1], -0.05 * p[0] + 0.01 * p[1] + 0.02 * p[2]];
        let field = DisplacementField::from_fn(&g, f);
        for p in [[3.3, 7.1, 22.0], [0.0, 0.0, 0.0], [29.9, 15.0, 1.0]] {
            let a = field.at(p);
            let b = f(p);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }
}
