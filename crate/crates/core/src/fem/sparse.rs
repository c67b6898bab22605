//! Compressed sparse row storage and a Jacobi-preconditioned conjugate
//! gradient solver for symmetric positive definite systems.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an all-zero matrix from per-row column lists (sorted, unique).
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        Self { n, row_ptr, cols, vals: vec![0.0; nnz] }
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let (a, b) = (self.row_ptr[row], self.row_ptr[row + 1]);
        let k = self.cols[a..b].binary_search(&col).expect("entry outside sparsity pattern");
        self.vals[a + k] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let (a, b) = (self.row_ptr[row], self.row_ptr[row + 1]);
        match self.cols[a..b].binary_search(&col) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b`, starting from zero.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, CgOutcome) {
    let n = a.n;
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return (x, CgOutcome { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return (x, CgOutcome { iterations: it, relative_residual: rel, converged: false });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return (x, CgOutcome { iterations: it + 1, relative_residual: rel, converged: true });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, CgOutcome { iterations: max_iter, relative_residual: rel, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| (i.saturating_sub(1)..=(i + 1).min(n - 1)).collect())
            .collect();
        let mut m = CsrMatrix::from_pattern(rows);
        for i in 0..n {
            m.add(i, i, 2.0);
            if i > 0 {
                m.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
            }
        }
        m
    }

    #[test]
    fn cg_matches_dense_solve() {
        let a = laplacian(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x, out) = conjugate_gradient(&a, &b, 1e-12, 1000);
        assert!(out.converged);
        let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..30 {
            assert!((x[i] - dense[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (x, out) = conjugate_gradient(&laplacian(5), &[0.0; 5], 1e-8, 10);
        assert!(out.converged);
        assert_eq!(x, vec![0.0; 5]);
    }

    #[test]
    #[should_panic(expected = "outside sparsity pattern")]
    fn adding_outside_pattern_panics() {
        laplacian(4).add(0, 3, 1.0);
    }
}
