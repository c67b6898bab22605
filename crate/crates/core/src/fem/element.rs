//! Trilinear 8-node hexahedron on a cube of side `h`.

use nalgebra::{SMatrix, SVector};

pub type ElementMatrix = SMatrix<f64, 24, 24>;

/// Local node `a` sits at corner `(a & 1, (a >> 1) & 1, (a >> 2) & 1)`.
pub fn corner(a: usize) -> [usize; 3] {
    [a & 1, (a >> 1) & 1, (a >> 2) & 1]
}

/// Isotropic elasticity matrix with engineering shear strains ordered
/// (xx, yy, zz, xy, yz, zx).
pub fn elasticity(youngs: f64, poisson: f64) -> SMatrix<f64, 6, 6> {
    let lambda = youngs * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = youngs / (2.0 * (1.0 + poisson));
    let mut d = SMatrix::<f64, 6, 6>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = lambda;
        }
        d[(i, i)] = lambda + 2.0 * mu;
        d[(i + 3, i + 3)] = mu;
    }
    d
}

/// Element stiffness by 2×2×2 Gauss quadrature.
pub fn hex8_stiffness(h: f64, youngs: f64, poisson: f64) -> ElementMatrix {
    let d = elasticity(youngs, poisson);
    let g = 1.0 / 3f64.sqrt();
    let jac = h / 2.0;
    let det = jac * jac * jac;
    let mut k = ElementMatrix::zeros();
    for gz in [-g, g] {
        for gy in [-g, g] {
            for gx in [-g, g] {
                let xi = [gx, gy, gz];
                let mut b = SMatrix::<f64, 6, 24>::zeros();
                for a in 0..8 {
                    let s = corner(a).map(|c| 2.0 * c as f64 - 1.0);
                    let f = [1.0 + s[0] * xi[0], 1.0 + s[1] * xi[1], 1.0 + s[2] * xi[2]];
                    let dn = [
                        s[0] * f[1] * f[2] / 8.0 / jac,
                        s[1] * f[0] * f[2] / 8.0 / jac,
                        s[2] * f[0] * f[1] / 8.0 / jac,
                    ];
                    let c = 3 * a;
                    b[(0, c)] = dn[0];
                    b[(1, c + 1)] = dn[1];
                    b[(2, c + 2)] = dn[2];
                    b[(3, c)] = dn[1];
                    b[(3, c + 1)] = dn[0];
                    b[(4, c + 1)] = dn[2];
                    b[(4, c + 2)] = dn[1];
                    b[(5, c)] = dn[2];
                    b[(5, c + 2)] = dn[0];
                }
                k += b.transpose() * d * b * det;
            }
        }
    }
    k
}

/// Consistent nodal vector of a uniform body force over the element.
pub fn body_force(h: f64, force_per_volume: [f64; 3]) -> SVector<f64, 24> {
    let share = h * h * h / 8.0;
    SVector::<f64, 24>::from_fn(|i, _| force_per_volume[i % 3] * share)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    /// Independent oracle: 3-point Gauss–Legendre, strain energy density
    /// written component-wise from Lamé constants.
    fn oracle(h: f64, e: f64, nu: f64) -> DMatrix<f64> {
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let pts = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let wts = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut k = DMatrix::zeros(24, 24);
        // Nodes at physical corners; shape functions in physical coordinates.
        let grad = |a: usize, x: [f64; 3]| -> [f64; 3] {
            let c = corner(a);
            let lin = |ci: usize, t: f64| if ci == 1 { t / h } else { 1.0 - t / h };
            let dlin = |ci: usize| if ci == 1 { 1.0 / h } else { -1.0 / h };
            [
                dlin(c[0]) * lin(c[1], x[1]) * lin(c[2], x[2]),
                lin(c[0], x[0]) * dlin(c[1]) * lin(c[2], x[2]),
                lin(c[0], x[0]) * lin(c[1], x[1]) * dlin(c[2]),
            ]
        };
        for (i, &pi) in pts.iter().enumerate() {
            for (j, &pj) in pts.iter().enumerate() {
                for (l, &pl) in pts.iter().enumerate() {
                    let x = [(pi + 1.0) * h / 2.0, (pj + 1.0) * h / 2.0, (pl + 1.0) * h / 2.0];
                    let w = wts[i] * wts[j] * wts[l] * (h / 2.0).powi(3);
                    for a in 0..8 {
                        let ga = grad(a, x);
                        for b in 0..8 {
                            let gb = grad(b, x);
                            let dot: f64 = (0..3).map(|m| ga[m] * gb[m]).sum();
                            for p in 0..3 {
                                for q in 0..3 {
                                    let mut v = lambda * ga[p] * gb[q] + mu * ga[q] * gb[p];
                                    if p == q {
                                        v += mu * dot;
                                    }
                                    k[(3 * a + p, 3 * b + q)] += w * v;
                                }
                            }
                        }
                    }
                }
            }
        }
        k
    }

    #[test]
    fn matches_independent_quadrature() {
        let k = hex8_stiffness(10.0, 3000.0, 0.3);
        let o = oracle(10.0, 3000.0, 0.3);
        let scale = o.amax();
        for i in 0..24 {
            for j in 0..24 {
                assert!((k[(i, j)] - o[(i, j)]).abs() < 1e-10 * scale, "entry {i},{j}: {} vs {}", k[(i, j)], o[(i, j)]);
            }
        }
    }

    #[test]
    fn symmetric_with_six_rigid_modes() {
        let k = hex8_stiffness(10.0, 3000.0, 0.3);
        assert!((k - k.transpose()).amax() < 1e-9);
        let eig = nalgebra::SymmetricEigen::new(DMatrix::from_iterator(24, 24, k.iter().copied()));
        let max = eig.eigenvalues.amax();
        let zeros = eig.eigenvalues.iter().filter(|v| v.abs() < 1e-9 * max).count();
        assert_eq!(zeros, 6);
        assert!(eig.eigenvalues.iter().all(|&v| v > -1e-9 * max));
    }

    #[test]
    fn translation_produces_no_force() {
        let k = hex8_stiffness(5.0, 1.0, 0.25);
        let u = SVector::<f64, 24>::from_fn(|i, _| [1.0, -2.0, 0.5][i % 3]);
        assert!((k * u).amax() < 1e-12);
    }

    #[test]
    fn body_force_sums_to_total() {
        let f = body_force(10.0, [0.0, 0.0, -2.0]);
        let total: f64 = (0..8).map(|a| f[3 * a + 2]).sum();
        assert!((total + 2000.0).abs() < 1e-9);
    }
}
