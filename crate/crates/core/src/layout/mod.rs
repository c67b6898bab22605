//! Discretized master-board layouts: rasterized parts, skylines, docking and
//! sliding.

mod bitmap;
mod slide;

pub use bitmap::{point_in_polygon, rasterize, Bits, PartBitmap, PartShapes, RasterError, Run, EMPTY_HI, EMPTY_LO, RASTER_RES_MM};
pub use slide::{slide, slide_boards, SLIDE_ITERATIONS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::Orientation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("part {part} fits no position on any board")]
    PackingOverflow { part: usize },
    #[error("placement of part {part} at ({u}, {v}) overlaps or leaves the board")]
    InvalidPlacement { part: usize, u: i32, v: i32 },
    #[error("unknown part {0}")]
    UnknownPart(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub part: usize,
    pub u: i32,
    pub v: i32,
    #[serde(rename = "o")]
    pub orientation: Orientation,
    /// Free space to the left of / below the part when it was placed,
    /// against the parts placed before it.
    #[serde(skip)]
    pub gap: [i32; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Top,
}

/// Docking criterion: wastage with the enclosed area as tie-breaker, or
/// wastage alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DockingCriterion {
    #[default]
    WastageEnclosed,
    WastageOnly,
}

/// A single board: placements in docking order plus occupancy and the right
/// and top skylines.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layout {
    width: usize,
    height: usize,
    placements: Vec<Placement>,
    rows: Vec<Bits>,
    cols: Vec<Bits>,
    /// `top[x]`: highest occupied row + 1 in column x.
    top: Vec<i32>,
    /// `right[y]`: rightmost occupied column + 1 in row y.
    right: Vec<i32>,
    bbox: Option<[i32; 4]>,
    occupied: i64,
}

fn union_box(a: Option<[i32; 4]>, b: [i32; 4]) -> [i32; 4] {
    match a {
        None => b,
        Some(a) => [a[0].min(b[0]), a[1].min(b[1]), a[2].max(b[2]), a[3].max(b[3])],
    }
}

fn box_area(b: [i32; 4]) -> i64 {
    (b[2] - b[0]) as i64 * (b[3] - b[1]) as i64
}

impl Layout {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            placements: Vec::new(),
            rows: vec![Bits::new(width); height],
            cols: vec![Bits::new(height); width],
            top: vec![0; width],
            right: vec![0; height],
            bbox: None,
            occupied: 0,
        }
    }

    /// Re-creates a layout from placements, validating each one.
    pub fn from_placements(width: usize, height: usize, placements: &[Placement], shapes: &PartShapes) -> Result<Self, LayoutError> {
        let mut l = Layout::empty(width, height);
        for p in placements {
            if p.part >= shapes.len() {
                return Err(LayoutError::UnknownPart(p.part));
            }
            let bm = shapes.get(p.part, p.orientation);
            if !l.in_bounds(bm, p.u, p.v) || l.overlaps(bm, p.u, p.v) {
                return Err(LayoutError::InvalidPlacement { part: p.part, u: p.u, v: p.v });
            }
            l.place(bm, p.u, p.v);
        }
        Ok(l)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn occupied(&self) -> i64 {
        self.occupied
    }

    pub fn bbox(&self) -> Option<[i32; 4]> {
        self.bbox
    }

    pub fn bbox_area(&self) -> i64 {
        self.bbox.map_or(0, box_area)
    }

    pub fn top_skyline(&self) -> &[i32] {
        &self.top
    }

    pub fn right_skyline(&self) -> &[i32] {
        &self.right
    }

    pub fn is_occupied(&self, x: usize, y: usize) -> bool {
        self.rows[y].get(x)
    }

    /// `1 − occupied / bbox area`; the empty layout has wastage 1.
    pub fn wastage(&self) -> f64 {
        wastage_of(self.occupied, self.bbox_area())
    }

    pub fn usage(&self) -> f64 {
        1.0 - self.wastage()
    }

    pub fn in_bounds(&self, bm: &PartBitmap, u: i32, v: i32) -> bool {
        u >= 0 && v >= 0 && u as usize + bm.width <= self.width && v as usize + bm.height <= self.height
    }

    /// Whether any filled pixel of `bm` at `(u, v)` hits an occupied pixel.
    /// Pixels outside the board never overlap.
    pub fn overlaps(&self, bm: &PartBitmap, u: i32, v: i32) -> bool {
        for (j, runs) in bm.row_runs.iter().enumerate() {
            let y = v + j as i32;
            if y < 0 || y as usize >= self.height {
                continue;
            }
            let row = &self.rows[y as usize];
            for &(a, b) in runs {
                let (lo, hi) = ((u + a).max(0) as usize, (u + b).max(0) as usize);
                if row.any_in(lo, hi) {
                    return true;
                }
            }
        }
        false
    }

    /// Smallest free distance between any filled run of `bm` at `(u, v)` and
    /// the nearest occupied pixel (or board border) to its left.
    pub fn left_gap(&self, bm: &PartBitmap, u: i32, v: i32) -> i32 {
        let mut gap = i32::MAX;
        for (j, runs) in bm.row_runs.iter().enumerate() {
            let y = v + j as i32;
            for &(a, _) in runs {
                let c0 = u + a;
                let g = match (y >= 0 && (y as usize) < self.height).then(|| self.rows[y as usize].last_set_before(c0.max(0) as usize)).flatten() {
                    Some(p) => c0 - p as i32 - 1,
                    None => c0,
                };
                gap = gap.min(g);
            }
        }
        gap
    }

    /// Vertical counterpart of [`Layout::left_gap`].
    pub fn bottom_gap(&self, bm: &PartBitmap, u: i32, v: i32) -> i32 {
        let mut gap = i32::MAX;
        for (i, runs) in bm.col_runs.iter().enumerate() {
            let x = u + i as i32;
            for &(a, _) in runs {
                let r0 = v + a;
                let g = match (x >= 0 && (x as usize) < self.width).then(|| self.cols[x as usize].last_set_before(r0.max(0) as usize)).flatten() {
                    Some(p) => r0 - p as i32 - 1,
                    None => r0,
                };
                gap = gap.min(g);
            }
        }
        gap
    }

    /// Bounding-box area of the layout with `bm` added at `(u, v)`.
    pub fn bbox_area_with(&self, bm: &PartBitmap, u: i32, v: i32) -> i64 {
        let b = bm.bbox;
        box_area(union_box(self.bbox, [u + b[0], v + b[1], u + b[2], v + b[3]]))
    }

    /// Wastage of the layout with `bm` added at `(u, v)`.
    pub fn wastage_with(&self, bm: &PartBitmap, u: i32, v: i32) -> f64 {
        wastage_of(self.occupied + bm.area, self.bbox_area_with(bm, u, v))
    }

    /// Space sealed off below the top skyline and left of the right skyline
    /// by adding `bm` at `(u, v)`, each clamped at zero.
    pub fn enclosed_area(&self, bm: &PartBitmap, u: i32, v: i32) -> i64 {
        let top = &self.top[u as usize..u as usize + bm.width];
        let d_top: i64 = top.iter().zip(&bm.col_hi).map(|(&t, &hi)| (v + hi - t).max(0) as i64).sum();
        let right = &self.right[v as usize..v as usize + bm.height];
        let d_right: i64 = right.iter().zip(&bm.row_hi).map(|(&r, &hi)| (u + hi - r).max(0) as i64).sum();
        (d_top - bm.area).max(0) + (d_right - bm.area).max(0)
    }

    /// Drops `bm` from +∞ along `side` at offset `offset` (a column for
    /// `Top`, a row for `Right`) until it touches the skyline or the border.
    pub fn docking_position(&self, bm: &PartBitmap, side: Side, offset: i32) -> Option<(i32, i32)> {
        if offset < 0 {
            return None;
        }
        let pos = match side {
            Side::Top => {
                if offset as usize + bm.width > self.width {
                    return None;
                }
                let top = &self.top[offset as usize..offset as usize + bm.width];
                let v = top.iter().zip(&bm.col_lo).map(|(&t, &lo)| t - lo).fold(0, i32::max);
                (offset, v)
            }
            Side::Right => {
                if offset as usize + bm.height > self.height {
                    return None;
                }
                let right = &self.right[offset as usize..offset as usize + bm.height];
                let u = right.iter().zip(&bm.row_lo).map(|(&r, &lo)| r - lo).fold(0, i32::max);
                (u, offset)
            }
        };
        self.in_bounds(bm, pos.0, pos.1).then_some(pos)
    }

    /// Adds `bm` at `(u, v)`. The caller guarantees the placement is valid.
    pub fn place(&mut self, bm: &PartBitmap, u: i32, v: i32) {
        debug_assert!(self.in_bounds(bm, u, v) && !self.overlaps(bm, u, v));
        let gap = [self.left_gap(bm, u, v), self.bottom_gap(bm, u, v)];
        for (j, runs) in bm.row_runs.iter().enumerate() {
            let y = (v as usize) + j;
            for &(a, b) in runs {
                let (lo, hi) = ((u + a) as usize, (u + b) as usize);
                self.rows[y].set_range(lo, hi);
                self.right[y] = self.right[y].max(hi as i32);
            }
        }
        for (i, runs) in bm.col_runs.iter().enumerate() {
            let x = u as usize + i;
            for &(a, b) in runs {
                self.cols[x].set_range((v + a) as usize, (v + b) as usize);
                self.top[x] = self.top[x].max(v + b);
            }
        }
        let b = bm.bbox;
        self.bbox = Some(union_box(self.bbox, [u + b[0], v + b[1], u + b[2], v + b[3]]));
        self.occupied += bm.area;
        self.placements.push(Placement { part: bm.part, u, v, orientation: bm.orientation, gap });
    }

    /// Per-pixel index into `placements()` of the owning part.
    pub fn owner_grid(&self, shapes: &PartShapes) -> Vec<Option<u32>> {
        let mut grid = vec![None; self.width * self.height];
        for (k, p) in self.placements.iter().enumerate() {
            let bm = shapes.get(p.part, p.orientation);
            for (j, runs) in bm.row_runs.iter().enumerate() {
                let y = p.v as usize + j;
                for &(a, b) in runs {
                    for x in (p.u + a) as usize..(p.u + b) as usize {
                        grid[y * self.width + x] = Some(k as u32);
                    }
                }
            }
        }
        grid
    }
}

pub fn wastage_of(occupied: i64, bbox_area: i64) -> f64 {
    if bbox_area == 0 {
        1.0
    } else {
        1.0 - occupied as f64 / bbox_area as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DockingChoice {
    pub side: Side,
    pub offset: i32,
    pub orientation: Orientation,
    pub u: i32,
    pub v: i32,
    pub bbox_area: i64,
    pub enclosed: i64,
}

impl DockingChoice {
    fn key(&self, criterion: DockingCriterion) -> (i64, i64, Side, i32, u8) {
        let e = match criterion {
            DockingCriterion::WastageEnclosed => self.enclosed,
            DockingCriterion::WastageOnly => 0,
        };
        (self.bbox_area, e, self.side, self.offset, self.orientation.quarter_turns())
    }
}

/// Scores every drop location of `part` and returns the best one.
pub fn best_docking(layout: &Layout, shapes: &PartShapes, part: usize, criterion: DockingCriterion) -> Option<DockingChoice> {
    let (x1, y1) = layout.bbox.map_or((0, 0), |b| (b[2], b[3]));
    let mut best: Option<DockingChoice> = None;
    for o in Orientation::ALL {
        let bm = shapes.get(part, o);
        for side in [Side::Right, Side::Top] {
            // Drops beyond the current bounding box are dominated.
            let limit = match side {
                Side::Top => (layout.width as i32 - bm.width as i32).min(x1),
                Side::Right => (layout.height as i32 - bm.height as i32).min(y1),
            };
            for offset in 0..=limit {
                let Some((u, v)) = layout.docking_position(bm, side, offset) else { continue };
                let bbox_area = layout.bbox_area_with(bm, u, v);
                if let Some(b) = &best {
                    if bbox_area > b.bbox_area {
                        continue;
                    }
                }
                let enclosed = match criterion {
                    DockingCriterion::WastageEnclosed => layout.enclosed_area(bm, u, v),
                    DockingCriterion::WastageOnly => 0,
                };
                let c = DockingChoice { side, offset, orientation: o, u, v, bbox_area, enclosed };
                if best.is_none_or(|b| c.key(criterion) < b.key(criterion)) {
                    best = Some(c);
                }
            }
        }
    }
    best
}

/// Docks the parts in `order` onto an empty `width × height` board.
pub fn docking(shapes: &PartShapes, order: &[usize], width: usize, height: usize, criterion: DockingCriterion) -> Result<Layout, LayoutError> {
    let mut layout = Layout::empty(width, height);
    for &part in order {
        let c = best_docking(&layout, shapes, part, criterion).ok_or(LayoutError::PackingOverflow { part })?;
        layout.place(shapes.get(part, c.orientation), c.u, c.v);
    }
    Ok(layout)
}

/// Board dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoardPx {
    pub width: usize,
    pub height: usize,
}

impl BoardPx {
    pub fn from_mm(width_mm: f64, height_mm: f64, res: f64) -> Self {
        Self { width: (width_mm / res + 1e-9).floor() as usize, height: (height_mm / res + 1e-9).floor() as usize }
    }
}

/// Layouts over a sequence of boards; later boards take overflow.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiLayout {
    pub boards: Vec<Layout>,
}

impl MultiLayout {
    pub fn empty(boards: &[BoardPx]) -> Self {
        Self { boards: boards.iter().map(|b| Layout::empty(b.width, b.height)).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.boards.iter().all(Layout::is_empty)
    }

    pub fn occupied(&self) -> i64 {
        self.boards.iter().map(Layout::occupied).sum()
    }

    pub fn bbox_area(&self) -> i64 {
        self.boards.iter().map(Layout::bbox_area).sum()
    }

    /// Area-weighted wastage over all boards.
    pub fn wastage(&self) -> f64 {
        wastage_of(self.occupied(), self.bbox_area())
    }

    pub fn placements(&self) -> impl Iterator<Item = (usize, &Placement)> {
        self.boards.iter().enumerate().flat_map(|(b, l)| l.placements().iter().map(move |p| (b, p)))
    }

    pub fn board_dims(&self) -> Vec<BoardPx> {
        self.boards.iter().map(|l| BoardPx { width: l.width, height: l.height }).collect()
    }
}

/// Docks parts on the first board; a part that fits nowhere there moves to
/// the next board, keeping the docking order.
pub fn docking_multi(shapes: &PartShapes, order: &[usize], boards: &[BoardPx], criterion: DockingCriterion) -> Result<MultiLayout, LayoutError> {
    let mut out = MultiLayout::empty(boards);
    for &part in order {
        let placed = out.boards.iter_mut().any(|layout| match best_docking(layout, shapes, part, criterion) {
            Some(c) => {
                layout.place(shapes.get(part, c.orientation), c.u, c.v);
                true
            }
            None => false,
        });
        if !placed {
            return Err(LayoutError::PackingOverflow { part });
        }
    }
    Ok(out)
}
