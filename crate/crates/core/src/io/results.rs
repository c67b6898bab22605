use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::design::{DesignParams, Part};
use crate::layout::{MultiLayout, Placement};
use crate::layout::DockingCriterion;
use crate::optimizer::{ExplorationResult, OptimizerConfig, Snapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementDoc {
    pub part: usize,
    pub name: String,
    /// Pixel position of the part's raster box.
    pub u: i32,
    pub v: i32,
    /// Counter-clockwise rotation in degrees: 0, 90, 180 or -90.
    pub o: crate::design::Orientation,
    /// Size of the rotated raster box in pixels.
    pub width_px: usize,
    pub height_px: usize,
    /// Contour at its final pose, board millimetres with v up.
    pub contour: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardLayoutDoc {
    pub width_mm: f64,
    pub height_mm: f64,
    pub width_px: usize,
    pub height_px: usize,
    /// Occupied pixel box `[x0, y0, x1, y1)`, absent on an empty board.
    pub bbox_px: Option<[i32; 4]>,
    pub occupied_px: i64,
    pub wastage: f64,
    pub placements: Vec<PlacementDoc>,
}

/// Everything a viewer needs to draw a layout without recomputing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDoc {
    pub raster_res: f64,
    pub wastage: f64,
    pub usage: f64,
    pub boards: Vec<BoardLayoutDoc>,
}

pub fn layout_doc(layout: &MultiLayout, parts: &[Part], boards_mm: &[[f64; 2]], res: f64) -> LayoutDoc {
    let boards = layout
        .boards
        .iter()
        .zip(boards_mm)
        .map(|(l, mm)| BoardLayoutDoc {
            width_mm: mm[0],
            height_mm: mm[1],
            width_px: l.width(),
            height_px: l.height(),
            bbox_px: l.bbox(),
            occupied_px: l.occupied(),
            wastage: l.wastage(),
            placements: l.placements().iter().map(|p| placement_doc(p, &parts[p.part], res)).collect(),
        })
        .collect();
    LayoutDoc { raster_res: res, wastage: layout.wastage(), usage: 1.0 - layout.wastage(), boards }
}

fn placement_doc(p: &Placement, part: &Part, res: f64) -> PlacementDoc {
    let t = super::plan::PlacementTransform::new(part, p, res);
    let px = |len: f64| ((len / res) - 1e-9).ceil().max(1.0) as usize;
    let (w, h) = (px(part.lengths[0]), px(part.lengths[1]));
    let (width_px, height_px) = if p.orientation.is_transposed() { (h, w) } else { (w, h) };
    PlacementDoc {
        part: p.part,
        name: part.name.clone(),
        u: p.u,
        v: p.v,
        o: p.orientation,
        width_px,
        height_px,
        contour: part.contour.iter().map(|&q| t.apply(q)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDoc {
    pub wastage: f64,
    pub usage: f64,
    pub ordering: Vec<usize>,
    pub params: DesignParams,
    pub layout: LayoutDoc,
    pub path: Vec<Snapshot>,
}

/// The search settings that determine a run's output. The worker count is
/// left out since results do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    pub seed: u64,
    pub generations: usize,
    pub keep: usize,
    pub improve_iterations: usize,
    pub raster_res: f64,
    pub criterion: DockingCriterion,
    pub max_grow_steps: usize,
}

impl From<&OptimizerConfig> for SearchSettings {
    fn from(c: &OptimizerConfig) -> Self {
        Self {
            seed: c.seed,
            generations: c.generations,
            keep: c.keep,
            improve_iterations: c.improve_iterations,
            raster_res: c.raster_res,
            criterion: c.criterion,
            max_grow_steps: c.max_grow_steps,
        }
    }
}

/// Output of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub design: String,
    pub settings: SearchSettings,
    pub start_wastage: f64,
    pub results: Vec<ResultDoc>,
    /// Indices into `results` of the diverse picks, best first.
    pub suggestions: Vec<usize>,
}

pub fn result_doc(r: &ExplorationResult, parts: &[Part], boards_mm: &[[f64; 2]], res: f64) -> ResultDoc {
    ResultDoc {
        wastage: r.wastage,
        usage: 1.0 - r.wastage,
        ordering: r.ordering.clone(),
        params: r.params.clone(),
        layout: layout_doc(&r.layout, parts, boards_mm, res),
        path: r.path.clone(),
    }
}

/// Pretty printing with every float written with six decimals.
struct FixedFloats(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloats {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(super::fmt_mm(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Canonical bytes for output documents: pretty JSON in declaration order,
/// floats fixed to six decimals, final newline.
pub fn to_canonical_json<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats(PrettyFormatter::new()));
    doc.serialize(&mut ser).expect("output documents always serialize");
    out.push(b'\n');
    out
}
