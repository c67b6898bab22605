use std::sync::Arc;

use thiserror::Error;

use crate::design::{material_extents, Orientation, Part};

/// Default raster resolution in mm per pixel.
pub const RASTER_RES_MM: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("part {part} rasterizes to an empty bitmap")]
    Empty { part: usize },
}

/// Fixed-length bit set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn new(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn set_range(&mut self, lo: usize, hi: usize) {
        let hi = hi.min(self.len);
        if lo >= hi {
            return;
        }
        let (wl, wh) = (lo / 64, (hi - 1) / 64);
        for w in wl..=wh {
            let mut m = u64::MAX;
            if w == wl {
                m &= u64::MAX << (lo % 64);
            }
            if w == wh {
                let top = (hi - 1) % 64;
                m &= if top == 63 { u64::MAX } else { (1u64 << (top + 1)) - 1 };
            }
            self.words[w] |= m;
        }
    }

    /// Whether any bit in `[lo, hi)` is set (clipped to the length).
    pub fn any_in(&self, lo: usize, hi: usize) -> bool {
        let hi = hi.min(self.len);
        if lo >= hi {
            return false;
        }
        let (wl, wh) = (lo / 64, (hi - 1) / 64);
        for w in wl..=wh {
            let mut m = u64::MAX;
            if w == wl {
                m &= u64::MAX << (lo % 64);
            }
            if w == wh {
                let top = (hi - 1) % 64;
                m &= if top == 63 { u64::MAX } else { (1u64 << (top + 1)) - 1 };
            }
            if self.words[w] & m != 0 {
                return true;
            }
        }
        false
    }

    /// Largest set index strictly below `pos`.
    pub fn last_set_before(&self, pos: usize) -> Option<usize> {
        let pos = pos.min(self.len);
        if pos == 0 {
            return None;
        }
        let mut w = (pos - 1) / 64;
        let top = (pos - 1) % 64;
        let mut m = if top == 63 { u64::MAX } else { (1u64 << (top + 1)) - 1 };
        loop {
            let bits = self.words[w] & m;
            if bits != 0 {
                return Some(w * 64 + 63 - bits.leading_zeros() as usize);
            }
            if w == 0 {
                return None;
            }
            w -= 1;
            m = u64::MAX;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Half-open pixel run `[start, end)`.
pub type Run = (i32, i32);

/// Rasterized part in one orientation, stored as filled runs. Row `j` is
/// `v = j` (bottom-up), column `i` is `u = i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartBitmap {
    pub part: usize,
    pub orientation: Orientation,
    pub width: usize,
    pub height: usize,
    pub area: i64,
    /// Filled runs per row and per column.
    pub row_runs: Vec<Vec<Run>>,
    pub col_runs: Vec<Vec<Run>>,
    /// Pixel bounding box `[x0, y0, x1, y1)` of filled pixels.
    pub bbox: [i32; 4],
    /// Per column and per row extent of filled pixels; empty lines hold
    /// [`EMPTY_LO`] and [`EMPTY_HI`].
    pub col_lo: Vec<i32>,
    pub col_hi: Vec<i32>,
    pub row_lo: Vec<i32>,
    pub row_hi: Vec<i32>,
}

pub const EMPTY_LO: i32 = i32::MAX / 4;
pub const EMPTY_HI: i32 = i32::MIN / 4;

fn extents(runs: &[Vec<Run>]) -> (Vec<i32>, Vec<i32>) {
    runs.iter().map(|r| (r.first().map_or(EMPTY_LO, |x| x.0), r.last().map_or(EMPTY_HI, |x| x.1))).unzip()
}

/// Columns whose membership differs between two sorted run lists, as
/// `(lo, hi, now_on)` spans.
fn run_changes(prev: &[Run], cur: &[Run], out: &mut Vec<(i32, i32, bool)>) {
    out.clear();
    let mut cuts: Vec<i32> = prev.iter().chain(cur).flat_map(|&(a, b)| [a, b]).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let (mut ip, mut ic) = (0, 0);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        while ip < prev.len() && prev[ip].1 <= lo {
            ip += 1;
        }
        while ic < cur.len() && cur[ic].1 <= lo {
            ic += 1;
        }
        let in_p = ip < prev.len() && prev[ip].0 <= lo;
        let in_c = ic < cur.len() && cur[ic].0 <= lo;
        if in_p != in_c {
            match out.last_mut() {
                Some(l) if l.1 == lo && l.2 == in_c => l.1 = hi,
                _ => out.push((lo, hi, in_c)),
            }
        }
    }
}

impl PartBitmap {
    pub fn from_mask(part: usize, orientation: Orientation, width: usize, height: usize, mask: Vec<bool>) -> Result<Self, RasterError> {
        assert_eq!(mask.len(), width * height);
        let row_runs = (0..height)
            .map(|j| {
                let row = &mask[j * width..(j + 1) * width];
                let mut out = Vec::new();
                let mut i = 0;
                while i < width {
                    if row[i] {
                        let s = i;
                        while i < width && row[i] {
                            i += 1;
                        }
                        out.push((s as i32, i as i32));
                    } else {
                        i += 1;
                    }
                }
                out
            })
            .collect();
        Self::from_row_runs(part, orientation, width, height, row_runs)
    }

    /// Builds a bitmap from sorted, disjoint runs per row.
    pub fn from_row_runs(part: usize, orientation: Orientation, width: usize, height: usize, row_runs: Vec<Vec<Run>>) -> Result<Self, RasterError> {
        assert_eq!(row_runs.len(), height);
        let mut col_runs: Vec<Vec<Run>> = vec![Vec::new(); width];
        let mut col_start = vec![0i32; width];
        let mut changes = Vec::new();
        let empty: Vec<Run> = Vec::new();
        for j in 0..=height {
            let prev = if j == 0 { &empty } else { &row_runs[j - 1] };
            let cur = if j == height { &empty } else { &row_runs[j] };
            run_changes(prev, cur, &mut changes);
            for &(lo, hi, on) in &changes {
                for i in lo as usize..hi as usize {
                    if on {
                        col_start[i] = j as i32;
                    } else {
                        col_runs[i].push((col_start[i], j as i32));
                    }
                }
            }
        }
        let area: i64 = row_runs.iter().flatten().map(|&(a, b)| (b - a) as i64).sum();
        if area == 0 {
            return Err(RasterError::Empty { part });
        }
        let x0 = col_runs.iter().position(|r| !r.is_empty()).unwrap() as i32;
        let x1 = col_runs.iter().rposition(|r| !r.is_empty()).unwrap() as i32 + 1;
        let y0 = row_runs.iter().position(|r| !r.is_empty()).unwrap() as i32;
        let y1 = row_runs.iter().rposition(|r| !r.is_empty()).unwrap() as i32 + 1;
        Ok(Self::assemble(part, orientation, width, height, area, row_runs, col_runs, [x0, y0, x1, y1]))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(part: usize, orientation: Orientation, width: usize, height: usize, area: i64, row_runs: Vec<Vec<Run>>, col_runs: Vec<Vec<Run>>, bbox: [i32; 4]) -> Self {
        let (col_lo, col_hi) = extents(&col_runs);
        let (row_lo, row_hi) = extents(&row_runs);
        Self { part, orientation, width, height, area, row_runs, col_runs, bbox, col_lo, col_hi, row_lo, row_hi }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        let i = i as i32;
        self.row_runs[j].iter().any(|&(a, b)| a <= i && i < b)
    }

    /// Dense row-major mask.
    pub fn to_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.width * self.height];
        for (j, runs) in self.row_runs.iter().enumerate() {
            for &(a, b) in runs {
                m[j * self.width + a as usize..j * self.width + b as usize].fill(true);
            }
        }
        m
    }

    /// Lowest filled row and highest filled row + 1 of column `i`.
    pub fn column_span(&self, i: usize) -> Option<(i32, i32)> {
        let r = &self.col_runs[i];
        Some((r.first()?.0, r.last()?.1))
    }

    /// Leftmost filled column and rightmost filled column + 1 of row `j`.
    pub fn row_span(&self, j: usize) -> Option<(i32, i32)> {
        let r = &self.row_runs[j];
        Some((r.first()?.0, r.last()?.1))
    }

    /// The same shape turned a quarter counter-clockwise: pixel `(i, j)` of
    /// the result is pixel `(j, height - 1 - i)` of `self`.
    pub fn rotated_ccw(&self) -> PartBitmap {
        let (w, h) = (self.height, self.width);
        let hh = self.height as i32;
        let flip = |runs: &Vec<Run>| runs.iter().rev().map(|&(a, b)| (hh - b, hh - a)).collect::<Vec<Run>>();
        let row_runs: Vec<Vec<Run>> = self.col_runs.iter().map(flip).collect();
        let col_runs: Vec<Vec<Run>> = self.row_runs.iter().rev().cloned().collect();
        let [x0, y0, x1, y1] = self.bbox;
        let o = Orientation::from_quarter_turns(self.orientation.quarter_turns() + 1);
        PartBitmap::assemble(self.part, o, w, h, self.area, row_runs, col_runs, [hh - y1, x0, hh - y0, x1])
    }
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Index of the first pixel whose center `x` satisfies `x >= c`.
fn first_center_from(c: f64, res: f64, w: usize) -> usize {
    let mut i = ((c / res) - 0.5).ceil().max(0.0) as usize;
    // Guard the float rounding so the result matches the exact comparison.
    while i > 0 && (i as f64 - 0.5) * res >= c {
        i -= 1;
    }
    while i < w && (i as f64 + 0.5) * res < c {
        i += 1;
    }
    i.min(w)
}

fn pixels(len: f64, res: f64) -> usize {
    ((len / res) - 1e-9).ceil().max(1.0) as usize
}

/// Rasterizes `part` at orientation `o`: a pixel is set iff its center lies
/// inside the contour.
pub fn rasterize(part: &Part, res: f64, o: Orientation) -> Result<PartBitmap, RasterError> {
    let (w, h) = (pixels(part.lengths[0], res), pixels(part.lengths[1], res));
    let poly = &part.contour;
    let mut xs = Vec::new();
    let mut row_runs = Vec::with_capacity(h);
    for j in 0..h {
        // Same crossing rule as `point_in_polygon`, one scanline at a time:
        // a center is inside iff an odd number of crossings lie right of it.
        let y = (j as f64 + 0.5) * res;
        xs.clear();
        let mut k = poly.len() - 1;
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[k]);
            if (a[1] > y) != (b[1] > y) {
                xs.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
            k = i;
        }
        xs.sort_by(f64::total_cmp);
        let mut runs: Vec<Run> = Vec::new();
        let n = xs.len();
        for k in 0..n {
            // Centers in [xs[k], xs[k+1]) have n - k - 1 crossings to their right.
            if (n - k - 1) % 2 == 1 {
                let lo = first_center_from(xs[k], res, w);
                let hi = if k + 1 < n { first_center_from(xs[k + 1], res, w) } else { w };
                if lo < hi {
                    match runs.last_mut() {
                        Some(l) if l.1 == lo as i32 => l.1 = hi as i32,
                        _ => runs.push((lo as i32, hi as i32)),
                    }
                }
            }
        }
        row_runs.push(runs);
    }
    let mut bm = PartBitmap::from_row_runs(part.id, Orientation::R0, w, h, row_runs)?;
    for _ in 0..o.quarter_turns() {
        bm = bm.rotated_ccw();
    }
    debug_assert_eq!((bm.width as f64, bm.height as f64), {
        let (a, b) = material_extents([w as f64, h as f64], o);
        (a, b)
    });
    Ok(bm)
}

fn all_orientations(part: &Part, res: f64) -> Result<Arc<[PartBitmap; 4]>, RasterError> {
    let b0 = rasterize(part, res, Orientation::R0)?;
    let b1 = b0.rotated_ccw();
    let b2 = b1.rotated_ccw();
    let b3 = b2.rotated_ccw();
    Ok(Arc::new([b0, b1, b2, b3]))
}

/// All four orientations of every part, indexed by part id.
#[derive(Debug, Clone, PartialEq)]
pub struct PartShapes {
    pub res: f64,
    pub bitmaps: Vec<Arc<[PartBitmap; 4]>>,
}

impl PartShapes {
    pub fn new(parts: &[Part], res: f64) -> Result<Self, RasterError> {
        Self::reusing(parts, res, None)
    }

    /// Like [`PartShapes::new`], sharing bitmaps of parts whose contour is
    /// unchanged from `prev`.
    pub fn reusing(parts: &[Part], res: f64, prev: Option<(&[Part], &PartShapes)>) -> Result<Self, RasterError> {
        let bitmaps = parts
            .iter()
            .enumerate()
            .map(|(i, p)| match prev {
                Some((old, shapes)) if shapes.res == res && old.get(i).is_some_and(|o| o.contour == p.contour && o.lengths == p.lengths) => {
                    Ok(shapes.bitmaps[i].clone())
                }
                _ => all_orientations(p, res),
            })
            .collect::<Result<Vec<_>, RasterError>>()?;
        Ok(Self { res, bitmaps })
    }

    /// Shapes built directly from bitmaps at orientation 0.
    pub fn from_bitmaps(res: f64, bitmaps: Vec<PartBitmap>) -> Self {
        let bitmaps = bitmaps
            .into_iter()
            .map(|b0| {
                let b1 = b0.rotated_ccw();
                let b2 = b1.rotated_ccw();
                let b3 = b2.rotated_ccw();
                Arc::new([b0, b1, b2, b3])
            })
            .collect();
        Self { res, bitmaps }
    }

    pub fn get(&self, part: usize, o: Orientation) -> &PartBitmap {
        &self.bitmaps[part][o.quarter_turns() as usize]
    }

    pub fn len(&self) -> usize {
        self.bitmaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bitmaps.is_empty()
    }
}
