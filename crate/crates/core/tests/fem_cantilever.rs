use offcut_core::design::{Axis, Part};
use offcut_core::fem::{assemble_stiffness, load_vector, solve_displacements, voxelize, LoadSpec, Material};

/// Horizontal plank along x clamped at x = 0, loaded by self-weight.
fn cantilever(length: f64, width: f64, depth: f64) -> (f64, f64) {
    let part = Part {
        id: 0,
        name: "beam".into(),
        contour: vec![[0.0, 0.0], [length, 0.0], [length, width], [0.0, width]],
        center: [length / 2.0, width / 2.0, 100.0 + depth / 2.0],
        lengths: [length, width],
        thickness: depth,
        normal: Axis::Z,
    };
    let grid = voxelize(std::slice::from_ref(&part), 10.0).unwrap();
    let fixed: Vec<usize> = (0..grid.node_count())
        .filter(|&n| {
            let p = grid.node_position(n);
            p[0].abs() < 1e-9 && (-1e-9..=width + 1e-9).contains(&p[1]) && (100.0 - 1e-9..=100.0 + depth + 1e-9).contains(&p[2])
        })
        .collect();
    let material = Material::default();
    let system = assemble_stiffness(&grid, &material, &fixed).unwrap();
    let spec = LoadSpec::default();
    let f = load_vector(&grid, &[part], &spec);
    let field = solve_displacements(&grid, &system, &f).unwrap();
    let tip = field.at([length, width / 2.0, 100.0 + depth / 2.0])[2].abs();
    let q = material.weight_density() * width * depth;
    let inertia = width * depth.powi(3) / 12.0;
    let analytic = q * length.powi(4) / (8.0 * material.youngs_mpa * inertia);
    (tip, analytic)
}

#[test]
fn cantilever_tip_matches_beam_theory() {
    for (length, depth) in [(300.0, 20.0), (400.0, 40.0)] {
        let (tip, analytic) = cantilever(length, 20.0, depth);
        let err = (tip - analytic).abs() / analytic;
        println!("L={length} depth={depth}: tip {tip:.6e} analytic {analytic:.6e} error {:.1}%", 100.0 * err);
        assert!(err < 0.3);
    }
}
