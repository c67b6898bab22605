//! Rank-revealing least-squares / least-norm solves.
//!
//! `lstsq` computes the minimum-norm minimizer of `‖A x − b‖₂` through a
//! complete orthogonal decomposition: a column-pivoted Householder QR of `A`
//! reveals the numerical rank, then a second QR of the leading trapezoid
//! removes the null-space component. This covers over-determined,
//! under-determined and rank-deficient systems with one code path.

use nalgebra::{DMatrix, DVector};

/// Relative rank cutoff, scaled by the largest column norm of the system.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    pub rank: usize,
}

/// Minimum-norm least-squares solution of `A x ≈ b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> LstsqSolution {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "lstsq: rhs length does not match row count");
    if m == 0 || n == 0 {
        return LstsqSolution { x: DVector::zeros(n), rank: 0 };
    }

    let mut r = a.clone();
    let mut c = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    let max_norm = (0..n).map(|j| a.column(j).norm()).fold(0.0_f64, f64::max);
    let tol = RANK_TOLERANCE * max_norm;
    if max_norm == 0.0 {
        return LstsqSolution { x: DVector::zeros(n), rank: 0 };
    }

    let steps = m.min(n);
    let mut rank = 0;
    for k in 0..steps {
        // Pivot: remaining column with the largest trailing norm.
        let (pivot, pivot_norm) = (k..n)
            .map(|j| (j, r.view((k, j), (m - k, 1)).norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_norm <= tol {
            break;
        }
        if pivot != k {
            r.swap_columns(k, pivot);
            perm.swap(k, pivot);
        }

        // Householder reflector zeroing r[k+1.., k].
        let x0 = r[(k, k)];
        let alpha = if x0 >= 0.0 { -pivot_norm } else { pivot_norm };
        let mut v = DVector::zeros(m - k);
        v[0] = x0 - alpha;
        for i in 1..(m - k) {
            v[i] = r[(k + i, k)];
        }
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            for j in k..n {
                let dot: f64 = (0..(m - k)).map(|i| v[i] * r[(k + i, j)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in 0..(m - k) {
                    r[(k + i, j)] -= f * v[i];
                }
            }
            let dot: f64 = (0..(m - k)).map(|i| v[i] * c[k + i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in 0..(m - k) {
                c[k + i] -= f * v[i];
            }
        }
        r[(k, k)] = alpha;
        for i in (k + 1)..m {
            r[(i, k)] = 0.0;
        }
        rank = k + 1;
    }

    if rank == 0 {
        return LstsqSolution { x: DVector::zeros(n), rank: 0 };
    }

    // T = [R11 R12] (rank × n). Tᵀ = Z L with Z orthonormal (n × rank).
    let t = r.view((0, 0), (rank, n)).into_owned();
    let qr = t.transpose().qr();
    let z = qr.q();
    let l = qr.r();

    // T y = c₁  ⇔  Lᵀ (Zᵀ y) = c₁ ; forward substitution on the lower factor Lᵀ.
    let rhs = c.rows(0, rank).into_owned();
    let mut w = DVector::zeros(rank);
    for i in 0..rank {
        let mut acc = rhs[i];
        for j in 0..i {
            acc -= l[(j, i)] * w[j];
        }
        w[i] = acc / l[(i, i)];
    }
    let y = z * w;

    let mut x = DVector::zeros(n);
    for (k, &col) in perm.iter().enumerate() {
        x[col] = y[k];
    }
    LstsqSolution { x, rank }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svd_pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let svd = a.clone().svd(true, true);
        svd.solve(b, 1e-10).unwrap()
    }

    #[test]
    fn square_full_rank_is_exact() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = lstsq(&a, &b);
        assert_eq!(s.rank, 3);
        assert!((&a * &s.x - &b).norm() < 1e-12);
    }

    #[test]
    fn underdetermined_gives_least_norm() {
        // x0 + x1 = 2 → least-norm (1, 1).
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let s = lstsq(&a, &b);
        assert_eq!(s.rank, 1);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overdetermined_matches_normal_equations() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 6.0]);
        let s = lstsq(&a, &b);
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_matches_svd_pseudo_inverse() {
        // Duplicate columns and a dependent row.
        let a = DMatrix::from_row_slice(
            3,
            4,
            &[1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 3.0, 1.0],
        );
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let s = lstsq(&a, &b);
        assert_eq!(s.rank, 2);
        let oracle = svd_pinv_solve(&a, &b);
        assert!((&s.x - &oracle).norm() < 1e-10, "{} vs {}", s.x, oracle);
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let a = DMatrix::zeros(2, 3);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let s = lstsq(&a, &b);
        assert_eq!(s.rank, 0);
        assert_eq!(s.x, DVector::zeros(3));
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_svd_on_random_systems(
            m in 1usize..7, n in 1usize..7,
            seed in proptest::collection::vec(-5.0f64..5.0, 49),
            rhs in proptest::collection::vec(-5.0f64..5.0, 7),
        ) {
            let a = DMatrix::from_fn(m, n, |i, j| seed[i * 7 + j]);
            let b = DVector::from_fn(m, |i, _| rhs[i]);
            let s = lstsq(&a, &b);
            let oracle = svd_pinv_solve(&a, &b);
            proptest::prop_assert!((&s.x - &oracle).norm() < 1e-7 * (1.0 + oracle.norm()));
        }
    }
}
