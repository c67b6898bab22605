use std::fmt::Write as _;

use crate::design::{Orientation, Part};
use crate::layout::{Layout, MultiLayout, Placement};

const GEOM_TOL: f64 = 1e-6;

/// Maps part-local coordinates to board millimetres for a placement, using
/// the same frame as the raster: the part occupies its pixel box at
/// `(u, v)` after `o` counter-clockwise quarter turns.
#[derive(Debug, Clone, Copy)]
pub struct PlacementTransform {
    origin: [f64; 2],
    /// Pixel-box extents before each quarter turn, in mm.
    heights: [f64; 4],
    turns: u8,
}

impl PlacementTransform {
    pub fn new(part: &Part, p: &Placement, res: f64) -> Self {
        let px = |len: f64| ((len / res) - 1e-9).ceil().max(1.0) * res;
        let (w, h) = (px(part.lengths[0]), px(part.lengths[1]));
        // Height of the box before turn k alternates between h and w.
        let heights = [h, w, h, w];
        Self { origin: [p.u as f64 * res, p.v as f64 * res], heights, turns: p.orientation.quarter_turns() }
    }

    pub fn apply(&self, q: [f64; 2]) -> [f64; 2] {
        let (mut x, mut y) = (q[0], q[1]);
        for k in 0..self.turns as usize {
            (x, y) = (self.heights[k] - y, x);
        }
        [self.origin[0] + x, self.origin[1] + y]
    }
}

/// A contour edge of `part` lying on the surface of `other` in 3D.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedEdge {
    pub part: usize,
    pub other: usize,
    /// Part-local endpoints.
    pub a: [f64; 2],
    pub b: [f64; 2],
}

/// Clips the segment `p0 → p1` to the box `[lo, hi]`, returning the
/// parameter interval inside it.
fn clip(p0: [f64; 3], p1: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..3 {
        let d = p1[k] - p0[k];
        let (l, h) = (lo[k] - GEOM_TOL, hi[k] + GEOM_TOL);
        if d.abs() < 1e-12 {
            if p0[k] < l || p0[k] > h {
                return None;
            }
            continue;
        }
        let (mut a, mut b) = ((l - p0[k]) / d, (h - p0[k]) / d);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn lerp<const N: usize>(a: [f64; N], b: [f64; N], t: f64) -> [f64; N] {
    std::array::from_fn(|k| a[k] + (b[k] - a[k]) * t)
}

/// Edges along which planks touch: a contour edge of one part, taken in its
/// mid-plane, running over a face of another part's box.
pub fn shared_edges(parts: &[Part]) -> Vec<SharedEdge> {
    let mut out = Vec::new();
    for a in parts {
        let n = a.contour.len();
        for k in 0..n {
            let (q0, q1) = (a.contour[k], a.contour[(k + 1) % n]);
            let (w0, w1) = (a.local_to_world(q0), a.local_to_world(q1));
            for b in parts {
                if b.id == a.id {
                    continue;
                }
                let (lo, hi) = b.world_box();
                let Some((t0, t1)) = clip(w0, w1, lo, hi) else { continue };
                let (c0, c1) = (lerp(w0, w1, t0), lerp(w0, w1, t1));
                let len = (0..3).map(|i| (c1[i] - c0[i]).powi(2)).sum::<f64>().sqrt();
                if len <= GEOM_TOL {
                    continue;
                }
                let on_face = (0..3).any(|i| {
                    let at = |v: f64| (c0[i] - v).abs() <= GEOM_TOL && (c1[i] - v).abs() <= GEOM_TOL;
                    at(lo[i]) || at(hi[i])
                });
                if on_face {
                    out.push(SharedEdge { part: a.id, other: b.id, a: lerp(q0, q1, t0), b: lerp(q0, q1, t1) });
                }
            }
        }
    }
    out
}

/// Fixed six-decimal formatting without negative zero.
pub fn fmt_mm(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn board_svg(layout: &Layout, parts: &[Part], shared: &[SharedEdge], board: [f64; 2], res: f64) -> String {
    let (w, h) = (fmt_mm(board[0]), fmt_mm(board[1]));
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}mm\" height=\"{h}mm\" viewBox=\"0 0 {w} {h}\">");
    let _ = writeln!(s, "<rect class=\"board\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.2\"/>");
    // Material space has v pointing up.
    let _ = writeln!(s, "<g transform=\"matrix(1 0 0 -1 0 {h})\">");
    s.push_str("<g class=\"parts\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.1\">\n");
    let mut shared_paths = Vec::new();
    for p in layout.placements() {
        let part = &parts[p.part];
        let t = PlacementTransform::new(part, p, res);
        let mut d = String::new();
        for (k, q) in part.contour.iter().enumerate() {
            let [x, y] = t.apply(*q);
            let _ = write!(d, "{}{} {}", if k == 0 { "M " } else { " L " }, fmt_mm(x), fmt_mm(y));
        }
        d.push_str(" Z");
        let _ = writeln!(s, "<path id=\"part-{}\" data-name=\"{}\" d=\"{d}\"/>", p.part, xml_escape(&part.name));
        for e in shared.iter().filter(|e| e.part == p.part) {
            let (a, b) = (t.apply(e.a), t.apply(e.b));
            shared_paths.push(format!(
                "<path class=\"shared\" data-parts=\"{},{}\" d=\"M {} {} L {} {}\"/>",
                e.part,
                e.other,
                fmt_mm(a[0]),
                fmt_mm(a[1]),
                fmt_mm(b[0]),
                fmt_mm(b[1])
            ));
        }
    }
    s.push_str("</g>\n");
    s.push_str("<g class=\"shared\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"0.3\">\n");
    for p in shared_paths {
        s.push_str(&p);
        s.push('\n');
    }
    s.push_str("</g>\n</g>\n</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One SVG document per board, in millimetres.
pub fn export_svg(layout: &MultiLayout, parts: &[Part], boards: &[[f64; 2]], res: f64) -> Vec<String> {
    let shared = shared_edges(parts);
    layout.boards.iter().zip(boards).map(|(l, &b)| board_svg(l, parts, &shared, b, res)).collect()
}

/// Rotation of a local point by `o` about the origin, for tests and callers
/// that need the continuous pose.
pub fn rotate(q: [f64; 2], o: Orientation) -> [f64; 2] {
    let (s, c) = o.radians().sin_cos();
    [c * q[0] - s * q[1], s * q[0] + c * q[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Axis;
    use crate::layout::PartShapes;

    fn rect_part(id: usize, w: f64, h: f64) -> Part {
        Part {
            id,
            name: format!("r{id}"),
            contour: vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]],
            center: [0.0; 3],
            lengths: [w, h],
            thickness: 3.0,
            normal: Axis::Z,
        }
    }

    fn paths(svg: &str) -> Vec<Vec<[f64; 2]>> {
        svg.lines()
            .filter(|l| l.starts_with("<path id="))
            .map(|l| {
                let d = l.split(" d=\"").nth(1).unwrap().trim_end_matches("\"/>");
                d.split(['M', 'L', 'Z'])
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        let v: Vec<f64> = t.split(' ').map(|n| n.parse().unwrap()).collect();
                        [v[0], v[1]]
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_rectangle_sits_at_the_origin() {
        let parts = vec![rect_part(0, 10.0, 5.0)];
        let shapes = PartShapes::new(&parts, 0.5).unwrap();
        let mut l = Layout::empty(100, 100);
        l.place(shapes.get(0, Orientation::R0), 0, 0);
        let svgs = export_svg(&MultiLayout { boards: vec![l] }, &parts, &[[50.0, 50.0]], 0.5);
        assert_eq!(svgs.len(), 1);
        let p = paths(&svgs[0]);
        assert_eq!(p, vec![vec![[0.0, 0.0], [10.0, 0.0], [10.0, 5.0], [0.0, 5.0]]]);
        assert!(svgs[0].contains("width=\"50.000000mm\""));
    }

    #[test]
    fn quarter_turn_rotates_the_contour() {
        let parts = vec![rect_part(0, 10.0, 5.0)];
        let shapes = PartShapes::new(&parts, 0.5).unwrap();
        let mut l = Layout::empty(100, 100);
        l.place(shapes.get(0, Orientation::R90), 4, 6);
        let svgs = export_svg(&MultiLayout { boards: vec![l] }, &parts, &[[50.0, 50.0]], 0.5);
        let got = &paths(&svgs[0])[0];
        // Rotate about the origin, then shift the rotated box's corner to the
        // placement origin.
        let rotated: Vec<[f64; 2]> = parts[0].contour.iter().map(|&q| rotate(q, Orientation::R90)).collect();
        let min_x = rotated.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
        let min_y = rotated.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
        for (g, r) in got.iter().zip(&rotated) {
            assert!((g[0] - (r[0] - min_x + 2.0)).abs() < 1e-6);
            assert!((g[1] - (r[1] - min_y + 3.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn transform_matches_the_raster_in_every_orientation() {
        let tri = Part { contour: vec![[0.0, 0.0], [7.1, 0.0], [0.0, 3.3]], lengths: [7.1, 3.3], ..rect_part(0, 7.1, 3.3) };
        let shapes = PartShapes::new(std::slice::from_ref(&tri), 0.5).unwrap();
        for o in Orientation::ALL {
            let bm = shapes.get(0, o);
            let t = PlacementTransform::new(&tri, &Placement { part: 0, u: 0, v: 0, orientation: o, gap: [0, 0] }, 0.5);
            let img: Vec<[f64; 2]> = tri.contour.iter().map(|&q| t.apply(q)).collect();
            for j in 0..bm.height {
                for i in 0..bm.width {
                    let c = [(i as f64 + 0.5) * 0.5, (j as f64 + 0.5) * 0.5];
                    assert_eq!(bm.get(i, j), crate::layout::point_in_polygon(&img, c), "{o:?} {i},{j}");
                }
            }
        }
    }

    #[test]
    fn touching_planks_share_an_edge() {
        // A vertical side plank whose top edge carries a horizontal top.
        let side = Part { id: 0, name: "side".into(), normal: Axis::X, center: [0.0, 0.0, 50.0], ..rect_part(0, 40.0, 100.0) };
        let top = Part { id: 1, name: "top".into(), normal: Axis::Z, center: [0.0, 0.0, 101.5], ..rect_part(1, 60.0, 40.0) };
        let edges = shared_edges(&[side, top]);
        assert_eq!(edges, vec![SharedEdge { part: 0, other: 1, a: [40.0, 100.0], b: [0.0, 100.0] }]);
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(fmt_mm(-1e-12), "0.000000");
        assert_eq!(fmt_mm(2.5), "2.500000");
    }
}
