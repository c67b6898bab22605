use super::{Layout, MultiLayout, PartBitmap, PartShapes};

/// Move iterations per part.
pub const SLIDE_ITERATIONS: usize = 4;

/// Leftward move closing the free space gained since the part was placed, or
/// the smallest rightward move clearing an overlap. `None` when neither
/// exists inside the board.
fn horizontal_move(l: &Layout, bm: &PartBitmap, u: i32, v: i32, baseline: i32) -> Option<i32> {
    if !l.overlaps(bm, u, v) {
        return Some(-(l.left_gap(bm, u, v) - baseline).max(0));
    }
    (1..).take_while(|s| (u + s) as usize + bm.width <= l.width()).find(|&s| !l.overlaps(bm, u + s, v))
}

fn vertical_move(l: &Layout, bm: &PartBitmap, u: i32, v: i32, baseline: i32) -> Option<i32> {
    if !l.overlaps(bm, u, v) {
        return Some(-(l.bottom_gap(bm, u, v) - baseline).max(0));
    }
    (1..).take_while(|s| (v + s) as usize + bm.height <= l.height()).find(|&s| !l.overlaps(bm, u, v + s))
}

/// Re-inserts the parts of `prev` in docking order with their (possibly
/// resized) bitmaps from `shapes`, nudging each part until it neither
/// overlaps nor leaves open space behind it. Returns the empty layout when a
/// part cannot be fitted.
pub fn slide(prev: &Layout, shapes: &PartShapes) -> Layout {
    let mut l = Layout::empty(prev.width(), prev.height());
    for p in prev.placements() {
        let bm = shapes.get(p.part, p.orientation);
        let (mut u, mut v) = (p.u, p.v);
        for _ in 0..SLIDE_ITERATIONS {
            let dx = horizontal_move(&l, bm, u, v, p.gap[0]);
            let dy = vertical_move(&l, bm, u, v, p.gap[1]);
            let (pu, pv) = match (dx, dy) {
                (None, None) => return Layout::empty(prev.width(), prev.height()),
                (Some(0), Some(0)) => break,
                (Some(dx), None) => (u + dx, v),
                (None, Some(dy)) => (u, v + dy),
                (Some(dx), Some(dy)) => {
                    let ax = l.bbox_area_with(bm, u + dx, v);
                    let ay = l.bbox_area_with(bm, u, v + dy);
                    if ax < ay || (ax == ay && dx < dy && dx != 0) {
                        (u + dx, v)
                    } else {
                        (u, v + dy)
                    }
                }
            };
            u = pu;
            v = pv;
        }
        if !l.in_bounds(bm, u, v) || l.overlaps(bm, u, v) {
            return Layout::empty(prev.width(), prev.height());
        }
        l.place(bm, u, v);
    }
    l
}

/// Slides every board independently; any failure empties all boards.
pub fn slide_boards(prev: &MultiLayout, shapes: &PartShapes) -> MultiLayout {
    let mut boards = Vec::with_capacity(prev.boards.len());
    for b in &prev.boards {
        let s = slide(b, shapes);
        if s.is_empty() && !b.is_empty() {
            return MultiLayout { boards: prev.boards.iter().map(|b| Layout::empty(b.width(), b.height())).collect() };
        }
        boards.push(s);
    }
    MultiLayout { boards }
}
