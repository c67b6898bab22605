//! Linear design constraints `C X = s` and the greedy sparse corrector.
//!
//! Given a valid point `X` and an imposed change `u`, the corrector grows a
//! set of free variables one at a time (positions before lengths, never the
//! variables touched by `u`) and re-solves the restricted system until the
//! residual vanishes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::lstsq;

/// Residual acceptance threshold (mm).
pub const EPS_RESIDUAL: f64 = 1e-9;
/// Rows with |r| at or below this are treated as satisfied when gathering
/// candidate variables.
const ROW_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    EqualLength,
    SumOfLengths,
    FixedLength,
    EqualPosition,
    Symmetry,
    Ground,
    FitVolume,
    Dynamic,
}

/// One linear row `Σ coef · x[var] = target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub kind: ConstraintKind,
    pub terms: Vec<(usize, f64)>,
    pub target: f64,
    /// Set on rows inserted during effectiveness enforcement.
    pub dynamic_tag: Option<u32>,
}

impl ConstraintRow {
    pub fn new(kind: ConstraintKind, terms: Vec<(usize, f64)>, target: f64) -> Self {
        Self { kind, terms, target, dynamic_tag: None }
    }

    pub fn fixed(kind: ConstraintKind, var: usize, value: f64) -> Self {
        Self::new(kind, vec![(var, 1.0)], value)
    }

    /// `a − b = offset`.
    pub fn difference(kind: ConstraintKind, a: usize, b: usize, offset: f64) -> Self {
        Self::new(kind, vec![(a, 1.0), (b, -1.0)], offset)
    }

    pub fn dot(&self, p: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * p[i]).sum()
    }

    pub fn coefficient(&self, var: usize) -> f64 {
        self.terms.iter().filter(|t| t.0 == var).map(|t| t.1).sum()
    }
}

/// Rows plus per-variable minimum lengths. `min_lengths[i]` is `Some` exactly
/// for length variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub n_vars: usize,
    pub rows: Vec<ConstraintRow>,
    pub min_lengths: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrectionStatus {
    Solved,
    Failed,
}

/// Outcome of a correction. The corrected point is `X + scale·u + d`; `scale`
/// is 1 except for best-partial results of the effectiveness enforcement.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionResult {
    pub d: Vec<f64>,
    pub scale: f64,
    pub active_set: Vec<usize>,
    pub residual: f64,
    pub status: CorrectionStatus,
}

impl CorrectionResult {
    pub fn is_solved(&self) -> bool {
        self.status == CorrectionStatus::Solved
    }

    pub fn apply(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        x.iter().zip(u).zip(&self.d).map(|((a, b), c)| a + self.scale * b + c).collect()
    }
}

impl ConstraintSystem {
    pub fn new(n_vars: usize) -> Self {
        Self { n_vars, rows: Vec::new(), min_lengths: vec![None; n_vars] }
    }

    pub fn push(&mut self, row: ConstraintRow) {
        assert!(row.terms.iter().all(|&(i, _)| i < self.n_vars), "constraint references a variable out of range");
        self.rows.push(row);
    }

    pub fn is_length(&self, var: usize) -> bool {
        self.min_lengths[var].is_some()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }

    /// Dense `C` (rows × vars).
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.rows.len(), self.n_vars);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in &row.terms {
                c[(i, j)] += v;
            }
        }
        c
    }

    /// `r = C p − s`.
    pub fn residual(&self, p: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(p) - r.target).collect()
    }

    pub fn residual_norm(&self, p: &[f64]) -> f64 {
        norm(&self.residual(p))
    }

    /// Length variables below their minimum at `p`, beyond the residual
    /// tolerance.
    pub fn min_length_violations(&self, p: &[f64]) -> Vec<usize> {
        self.min_lengths
            .iter()
            .enumerate()
            .filter_map(|(i, m)| match m {
                Some(m) if p[i] < *m - EPS_RESIDUAL => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn remove_dynamic(&mut self) {
        self.rows.retain(|r| r.dynamic_tag.is_none());
    }

    pub fn has_dynamic(&self) -> bool {
        self.rows.iter().any(|r| r.dynamic_tag.is_some())
    }

    /// Priority of freeing variable `var` given residual `r`: 0 for positions,
    /// `−|m|` for lengths, `−∞` when the predicted move breaks the minimum
    /// length. `m` is the least-squares step of this variable alone.
    pub fn score_variable(&self, var: usize, r: &[f64], value: f64) -> f64 {
        let (mut ctr, mut ctc) = (0.0, 0.0);
        for (row, ri) in self.rows.iter().zip(r) {
            let c = row.coefficient(var);
            ctr += c * ri;
            ctc += c * c;
        }
        if ctc == 0.0 {
            return 0.0;
        }
        let m = -ctr / ctc;
        match self.min_lengths[var] {
            None => 0.0,
            Some(min) if value + m < min => f64::NEG_INFINITY,
            Some(_) => -m.abs(),
        }
    }

    /// Least-norm correction supported on `active`, solving
    /// `Σ_k d_k c_ik = s_i − p·c_i` in the least-squares sense.
    pub fn solve_partial_correction(&self, active: &[usize], p: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.n_vars];
        if active.is_empty() || self.rows.is_empty() {
            return d;
        }
        let mut a = DMatrix::zeros(self.rows.len(), active.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (k, &var) in active.iter().enumerate() {
                a[(i, k)] = row.coefficient(var);
            }
        }
        let b = DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.target - r.dot(p)));
        let sol = lstsq(&a, &b);
        for (k, &var) in active.iter().enumerate() {
            d[var] = sol.x[k];
        }
        d
    }

    /// Greedy sparse correction restoring `C(X+u+d) = s` with `d_i = 0`
    /// wherever `u_i ≠ 0`. `seed` pre-populates the active set (variables of
    /// newly added parts).
    pub fn correct(&self, x: &[f64], u: &[f64], seed: &[usize]) -> CorrectionResult {
        let n = self.n_vars;
        assert_eq!(x.len(), n);
        assert_eq!(u.len(), n);
        let p: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + b).collect();
        let frozen: Vec<bool> = u.iter().map(|&v| v != 0.0).collect();

        let mut active: Vec<usize> = seed.iter().copied().filter(|&i| !frozen[i]).collect();
        active.sort_unstable();
        active.dedup();
        let mut d = if active.is_empty() { vec![0.0; n] } else { self.solve_partial_correction(&active, &p) };

        loop {
            let q: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + b).collect();
            let r = self.residual(&q);
            let rn = norm(&r);
            if rn < EPS_RESIDUAL {
                let status = if self.min_length_violations(&q).is_empty() {
                    CorrectionStatus::Solved
                } else {
                    CorrectionStatus::Failed
                };
                return CorrectionResult { d, scale: 1.0, active_set: active, residual: rn, status };
            }

            // Candidates: variables of unsatisfied rows, minus active and frozen.
            let mut candidates: Vec<usize> = self
                .rows
                .iter()
                .zip(&r)
                .filter(|(_, ri)| ri.abs() > ROW_EPS)
                .flat_map(|(row, _)| row.terms.iter().filter(|t| t.1 != 0.0).map(|t| t.0))
                .filter(|&i| !frozen[i] && !active.contains(&i))
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            if candidates.is_empty() {
                return CorrectionResult { d, scale: 1.0, active_set: active, residual: rn, status: CorrectionStatus::Failed };
            }

            let mut best: Option<(usize, f64)> = None;
            for &v in &candidates {
                let s = self.score_variable(v, &r, q[v]);
                match best {
                    None => best = Some((v, s)),
                    Some((_, bs)) if s > bs => best = Some((v, s)),
                    _ => {}
                }
            }
            let (b, _) = best.expect("non-empty candidates");
            active.push(b);
            d = self.solve_partial_correction(&active, &p);
        }
    }

    /// Indices of rows whose residual at `p` exceeds `EPS_RESIDUAL`.
    pub fn violated_rows(&self, p: &[f64]) -> Vec<(usize, f64)> {
        self.residual(p)
            .into_iter()
            .enumerate()
            .filter(|(_, r)| r.abs() >= EPS_RESIDUAL)
            .collect()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
