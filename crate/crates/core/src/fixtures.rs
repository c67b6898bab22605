//! Small hand-built designs shared by tests, benchmarks and the CLI.

use crate::constraints::{ConstraintKind, ConstraintRow, ConstraintSystem};
use crate::design::{Axis, Design, PlankDesign, PlankSpec};
use crate::effectiveness::{EffectivenessSpec, InnerVolume};
use crate::optimizer::Problem;

/// A plank design with its constraint system, effectiveness spec and a valid
/// starting point.
#[derive(Debug, Clone)]
pub struct PlankFixture {
    pub design: PlankDesign,
    pub system: ConstraintSystem,
    pub spec: EffectivenessSpec,
    pub x: Vec<f64>,
}

fn spec(name: &str, normal: Axis) -> PlankSpec {
    PlankSpec { name: name.into(), normal, profile: None }
}

/// Base plank on free standing height, a grounded post and a top resting on
/// the post; 200 mm must stay clear above the base. Lowering the post by
/// `u = −100` first breaks the clearance at exactly 60% of the edit.
pub fn inner_volume_bisection() -> (PlankFixture, Vec<f64>) {
    let design = PlankDesign::new(vec![spec("base", Axis::Z), spec("post", Axis::X), spec("top", Axis::Z)]);
    #[rustfmt::skip]
    let x = vec![
        50.0, 50.0, 58.5, 100.0, 100.0, 3.0,
        171.5, 50.0, 160.0, 3.0, 100.0, 320.0,
        100.0, 50.0, 321.5, 200.0, 100.0, 3.0,
    ];
    let mut system = ConstraintSystem::new(design.planks.len() * 6);
    for p in 0..3 {
        for a in [Axis::X, Axis::Y, Axis::Z] {
            system.min_lengths[PlankDesign::length_var(p, a)] = Some(1.0);
        }
        let t = design.thickness_var(p);
        system.push(ConstraintRow::fixed(ConstraintKind::FixedLength, t, 3.0));
    }
    let post_cz = PlankDesign::center_var(1, Axis::Z);
    let post_lz = PlankDesign::length_var(1, Axis::Z);
    let top_cz = PlankDesign::center_var(2, Axis::Z);
    let top_lz = PlankDesign::length_var(2, Axis::Z);
    system.push(ConstraintRow::new(ConstraintKind::Ground, vec![(post_cz, 1.0), (post_lz, -0.5)], 0.0));
    system.push(ConstraintRow::new(
        ConstraintKind::EqualPosition,
        vec![(top_cz, 1.0), (top_lz, -0.5), (post_cz, -1.0), (post_lz, -0.5)],
        0.0,
    ));
    let spec = EffectivenessSpec { inner_volumes: vec![InnerVolume { support: 0, height: 200.0 }], ..Default::default() };
    let mut u = vec![0.0; x.len()];
    u[post_lz] = -100.0;
    (PlankFixture { design, system, spec, x }, u)
}

/// A complete optimization problem with a feasible start point.
#[derive(Debug, Clone)]
pub struct DesignFixture {
    pub problem: Problem,
    pub x: Vec<f64>,
}

fn rounded_rect(r: f64, segments: usize) -> Vec<[f64; 2]> {
    let corners = [(1.0 - r, r, -90.0), (1.0 - r, 1.0 - r, 0.0), (r, 1.0 - r, 90.0), (r, r, 180.0)];
    let mut out = Vec::new();
    for (cx, cy, a0) in corners {
        for k in 0..=segments {
            let a = (a0 + 90.0 * k as f64 / segments as f64).to_radians();
            out.push([cx + r * a.cos(), cy + r * a.sin()]);
        }
    }
    out
}

fn arched(width: f64, height: f64, segments: usize) -> Vec<[f64; 2]> {
    let (c, rx) = (0.5, width / 2.0);
    let mut out = vec![[0.0, 0.0], [c - rx, 0.0]];
    for k in 1..segments {
        let a = std::f64::consts::PI * (1.0 - k as f64 / segments as f64);
        out.push([c + rx * a.cos(), height * a.sin()]);
    }
    out.extend([[c + rx, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
    out
}

/// Coffee table: rounded top on two arched side legs with a shelf between
/// them. Width, depth and height are the only free quantities.
pub fn coffee_table() -> DesignFixture {
    coffee_table_with(TEASER_DIMS, TEASER_BOARD)
}

pub fn coffee_table_with(dims: [f64; 3], board: [f64; 2]) -> DesignFixture {
    use ConstraintKind::*;
    let design = PlankDesign::new(vec![
        PlankSpec { name: "top".into(), normal: Axis::Z, profile: Some(rounded_rect(0.12, 6)) },
        PlankSpec { name: "leg_left".into(), normal: Axis::X, profile: Some(arched(0.5, 0.3, 12)) },
        PlankSpec { name: "leg_right".into(), normal: Axis::X, profile: Some(arched(0.5, 0.3, 12)) },
        PlankSpec { name: "shelf".into(), normal: Axis::Z, profile: None },
    ]);
    let t = 12.0;
    let [w, d, h] = dims;
    let shelf_z = 0.3 * h;
    #[rustfmt::skip]
    let x = vec![
        0.0, 0.0, h + t / 2.0, w, d, t,
        -w / 2.0 + t / 2.0, 0.0, h / 2.0, t, d, h,
        w / 2.0 - t / 2.0, 0.0, h / 2.0, t, d, h,
        0.0, 0.0, shelf_z, w - 2.0 * t, d, t,
    ];
    let v = |p: usize, slot: usize| p * 6 + slot;
    let (cx, cy, cz, lx, ly, lz) = (0, 1, 2, 3, 4, 5);
    let mut s = ConstraintSystem::new(24);
    for p in 0..4 {
        for a in [Axis::X, Axis::Y, Axis::Z] {
            s.min_lengths[PlankDesign::length_var(p, a)] = Some(t);
        }
        s.push(ConstraintRow::fixed(FixedLength, design.thickness_var(p), t));
    }
    for leg in [1, 2] {
        s.push(ConstraintRow::new(Ground, vec![(v(leg, cz), 1.0), (v(leg, lz), -0.5)], 0.0));
        s.push(ConstraintRow::difference(EqualPosition, v(leg, cy), v(0, cy), 0.0));
        s.push(ConstraintRow::difference(EqualLength, v(leg, ly), v(0, ly), 0.0));
    }
    s.push(ConstraintRow::new(EqualPosition, vec![(v(0, cz), 1.0), (v(0, lz), -0.5), (v(1, cz), -1.0), (v(1, lz), -0.5)], 0.0));
    s.push(ConstraintRow::difference(EqualLength, v(1, lz), v(2, lz), 0.0));
    s.push(ConstraintRow::new(Symmetry, vec![(v(1, cx), 1.0), (v(2, cx), 1.0), (v(0, cx), -2.0)], 0.0));
    s.push(ConstraintRow::new(EqualPosition, vec![(v(1, cx), 1.0), (v(1, lx), -0.5), (v(0, cx), -1.0), (v(0, lx), 0.5)], 0.0));
    s.push(ConstraintRow::fixed(EqualPosition, v(0, cx), 0.0));
    s.push(ConstraintRow::fixed(EqualPosition, v(0, cy), 0.0));
    s.push(ConstraintRow::difference(EqualPosition, v(3, cy), v(0, cy), 0.0));
    s.push(ConstraintRow::difference(EqualLength, v(3, ly), v(0, ly), 0.0));
    s.push(ConstraintRow::new(
        SumOfLengths,
        vec![(v(3, lx), 1.0), (v(2, cx), -1.0), (v(1, cx), 1.0), (v(1, lx), 0.5), (v(2, lx), 0.5)],
        0.0,
    ));
    s.push(ConstraintRow::difference(EqualPosition, v(3, cx), v(0, cx), 0.0));
    s.push(ConstraintRow::new(EqualPosition, vec![(v(3, cz), 1.0), (v(1, lz), -0.3)], 0.0));
    let _ = (lx, ly);
    let problem = Problem { design: Design::Planks(design), system: s, spec: EffectivenessSpec::default(), boards: vec![board] };
    DesignFixture { problem, x }
}

pub const TEASER_DIMS: [f64; 3] = [390.0, 230.0, 260.0];
pub const TEASER_BOARD: [f64; 2] = [600.0, 700.0];

/// Bookshelf: two sides standing on the floor with bottom, middle and top
/// shelves spanning between them. All parts are plain rectangles.
pub fn bookshelf() -> DesignFixture {
    bookshelf_with([400.0, 250.0, 700.0], [800.0, 1200.0])
}

pub fn bookshelf_with(dims: [f64; 3], board: [f64; 2]) -> DesignFixture {
    use ConstraintKind::*;
    let design = PlankDesign::new(vec![
        spec("side_left", Axis::X),
        spec("side_right", Axis::X),
        spec("bottom", Axis::Z),
        spec("middle", Axis::Z),
        spec("top", Axis::Z),
    ]);
    let t = 18.0;
    let [w, d, h] = dims;
    #[rustfmt::skip]
    let x = vec![
        -w / 2.0 + t / 2.0, 0.0, h / 2.0, t, d, h,
        w / 2.0 - t / 2.0, 0.0, h / 2.0, t, d, h,
        0.0, 0.0, t / 2.0, w - 2.0 * t, d, t,
        0.0, 0.0, h / 2.0, w - 2.0 * t, d, t,
        0.0, 0.0, h - t / 2.0, w - 2.0 * t, d, t,
    ];
    let v = |p: usize, slot: usize| p * 6 + slot;
    let (cx, cy, cz, lx, ly, lz) = (0, 1, 2, 3, 4, 5);
    let mut s = ConstraintSystem::new(30);
    for p in 0..5 {
        for a in [Axis::X, Axis::Y, Axis::Z] {
            s.min_lengths[PlankDesign::length_var(p, a)] = Some(t);
        }
        s.push(ConstraintRow::fixed(FixedLength, design.thickness_var(p), t));
    }
    s.push(ConstraintRow::fixed(EqualPosition, v(0, cy), 0.0));
    for side in [0, 1] {
        s.push(ConstraintRow::new(Ground, vec![(v(side, cz), 1.0), (v(side, lz), -0.5)], 0.0));
    }
    s.push(ConstraintRow::difference(EqualLength, v(1, lz), v(0, lz), 0.0));
    s.push(ConstraintRow::new(Symmetry, vec![(v(0, cx), 1.0), (v(1, cx), 1.0)], 0.0));
    for p in 1..5 {
        s.push(ConstraintRow::difference(EqualPosition, v(p, cy), v(0, cy), 0.0));
        s.push(ConstraintRow::difference(EqualLength, v(p, ly), v(0, ly), 0.0));
    }
    for shelf in 2..5 {
        s.push(ConstraintRow::fixed(EqualPosition, v(shelf, cx), 0.0));
        s.push(ConstraintRow::new(
            SumOfLengths,
            vec![(v(shelf, lx), 1.0), (v(1, cx), -1.0), (v(0, cx), 1.0), (v(0, lx), 0.5), (v(1, lx), 0.5)],
            0.0,
        ));
    }
    s.push(ConstraintRow::new(Ground, vec![(v(2, cz), 1.0), (v(2, lz), -0.5)], 0.0));
    s.push(ConstraintRow::new(EqualPosition, vec![(v(3, cz), 1.0), (v(0, lz), -0.5)], 0.0));
    s.push(ConstraintRow::new(EqualPosition, vec![(v(4, cz), 1.0), (v(4, lz), 0.5), (v(0, lz), -1.0)], 0.0));
    let problem = Problem { design: Design::Planks(design), system: s, spec: EffectivenessSpec::default(), boards: vec![board] };
    DesignFixture { problem, x }
}
