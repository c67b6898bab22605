//! Parameterized designs: a configuration vector maps to a fixed list of
//! planar parts (extruded polygons), each with a 3D bounding box.

mod parametric;
mod planks;
mod sizing;

pub use parametric::{Affine, ParametricDesign, ParametricPart};
pub use planks::{PlankDesign, PlankSpec, PLANK_VARS};
pub use sizing::{size_gradients, SizeChange, SizeModel, SizingError, FD_STEP_MM};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("part `{part}` has a degenerate extent ({lx} x {ly} mm)")]
    Degenerate { part: String, lx: f64, ly: f64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// World axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two world axes spanning a plank whose thickness runs along `self`,
    /// in (local x, local y) order.
    pub fn in_plane(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// Material-space orientation of a part: 0, π/2, π or −π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Orientation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::R0, Orientation::R90, Orientation::R180, Orientation::R270];

    /// Counter-clockwise quarter turns.
    pub fn quarter_turns(self) -> u8 {
        match self {
            Orientation::R0 => 0,
            Orientation::R90 => 1,
            Orientation::R180 => 2,
            Orientation::R270 => 3,
        }
    }

    pub fn from_quarter_turns(q: u8) -> Self {
        Orientation::ALL[(q % 4) as usize]
    }

    pub fn radians(self) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            Orientation::R0 => 0.0,
            Orientation::R90 => FRAC_PI_2,
            Orientation::R180 => PI,
            Orientation::R270 => -FRAC_PI_2,
        }
    }

    pub fn degrees(self) -> i32 {
        match self {
            Orientation::R0 => 0,
            Orientation::R90 => 90,
            Orientation::R180 => 180,
            Orientation::R270 => -90,
        }
    }

    pub fn from_degrees(d: i32) -> Option<Self> {
        match d.rem_euclid(360) {
            0 => Some(Orientation::R0),
            90 => Some(Orientation::R90),
            180 => Some(Orientation::R180),
            270 => Some(Orientation::R270),
            _ => None,
        }
    }

    /// True when the part's local axes are swapped in material space.
    pub fn is_transposed(self) -> bool {
        matches!(self, Orientation::R90 | Orientation::R270)
    }
}

impl Serialize for Orientation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Orientation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let deg = i32::deserialize(d)?;
        Orientation::from_degrees(deg)
            .ok_or_else(|| serde::de::Error::custom(format!("orientation must be one of 0, 90, 180, -90 (got {deg})")))
    }
}

/// The configuration vector X with one label per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl DesignParams {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(names.len(), values.len());
        Self { names, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { names: self.names.clone(), values }
    }
}

/// One planar part: a closed CCW polygon inside its `lengths` box, extruded by
/// `thickness` along `normal`, centered at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub id: usize,
    pub name: String,
    pub contour: Vec<[f64; 2]>,
    pub center: [f64; 3],
    pub lengths: [f64; 2],
    pub thickness: f64,
    pub normal: Axis,
}

impl Part {
    /// Axis-aligned world box `(min, max)`.
    pub fn world_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut half = [0.0; 3];
        let (a, b) = self.normal.in_plane();
        half[a.index()] = self.lengths[0] / 2.0;
        half[b.index()] = self.lengths[1] / 2.0;
        half[self.normal.index()] = self.thickness / 2.0;
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for k in 0..3 {
            lo[k] = self.center[k] - half[k];
            hi[k] = self.center[k] + half[k];
        }
        (lo, hi)
    }

    /// Maps a local contour point to world coordinates on the part's mid-plane.
    pub fn local_to_world(&self, p: [f64; 2]) -> [f64; 3] {
        let (lo, _) = self.world_box();
        let (a, b) = self.normal.in_plane();
        let mut w = self.center;
        w[a.index()] = lo[a.index()] + p[0];
        w[b.index()] = lo[b.index()] + p[1];
        w
    }

    pub fn contour_area(&self) -> f64 {
        polygon_area(&self.contour)
    }
}

/// Signed shoelace area (positive for CCW).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    acc / 2.0
}

/// Material-space extents `(w, h)` of a part under orientation `o`.
pub fn material_extents(lengths: [f64; 2], o: Orientation) -> (f64, f64) {
    if o.is_transposed() {
        (lengths[1], lengths[0])
    } else {
        (lengths[0], lengths[1])
    }
}

/// Evaluates a configuration vector into parts. The part count never depends
/// on the parameters.
pub trait DesignEvaluator: Send + Sync {
    fn param_count(&self) -> usize;
    fn part_count(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    fn evaluate(&self, x: &[f64]) -> Result<Vec<Part>, DesignError>;
}

/// Either bundled evaluator, cheaply cloneable for per-worker copies.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Planks(PlankDesign),
    Parametric(ParametricDesign),
}

impl DesignEvaluator for Design {
    fn param_count(&self) -> usize {
        match self {
            Design::Planks(d) => d.param_count(),
            Design::Parametric(d) => d.param_count(),
        }
    }

    fn part_count(&self) -> usize {
        match self {
            Design::Planks(d) => d.part_count(),
            Design::Parametric(d) => d.part_count(),
        }
    }

    fn param_names(&self) -> Vec<String> {
        match self {
            Design::Planks(d) => d.param_names(),
            Design::Parametric(d) => d.param_names(),
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<Part>, DesignError> {
        match self {
            Design::Planks(d) => d.evaluate(x),
            Design::Parametric(d) => d.evaluate(x),
        }
    }
}

pub(crate) fn check_len(expected: usize, x: &[f64]) -> Result<(), DesignError> {
    if x.len() != expected {
        return Err(DesignError::ParamCount { expected, got: x.len() });
    }
    Ok(())
}
