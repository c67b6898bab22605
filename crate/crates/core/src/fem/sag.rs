use serde::{Deserialize, Serialize};

use super::DisplacementField;
use crate::design::Part;

/// Samples per side of each plank's surface grid.
pub const SAG_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlankSag {
    pub part: usize,
    pub sagging: bool,
    pub max_deflection: f64,
    /// Row-major `SAG_SAMPLES × SAG_SAMPLES` deflections (mm).
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SagReport {
    pub threshold: f64,
    pub planks: Vec<PlankSag>,
}

impl SagReport {
    pub fn sagging_parts(&self) -> Vec<usize> {
        self.planks.iter().filter(|p| p.sagging).map(|p| p.part).collect()
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|k| a[k] + t * (b[k] - a[k]))
}

/// Deflection of each mid-plane sample relative to the straight line between
/// the edge samples of its row, along both in-plane axes.
pub fn detect_sagging(field: &DisplacementField, parts: &[Part], threshold: f64) -> SagReport {
    let n = SAG_SAMPLES;
    let last = (n - 1) as f64;
    let planks = parts
        .iter()
        .map(|part| {
            let disp: Vec<[f64; 3]> = (0..n * n)
                .map(|idx| {
                    let (a, b) = (idx % n, idx / n);
                    let local = [a as f64 / last * part.lengths[0], b as f64 / last * part.lengths[1]];
                    field.at(part.local_to_world(local))
                })
                .collect();
            let at = |a: usize, b: usize| disp[a + n * b];
            let samples: Vec<f64> = (0..n * n)
                .map(|idx| {
                    let (a, b) = (idx % n, idx / n);
                    let along_x = dist(at(a, b), lerp(at(0, b), at(n - 1, b), a as f64 / last));
                    let along_y = dist(at(a, b), lerp(at(a, 0), at(a, n - 1), b as f64 / last));
                    along_x.max(along_y)
                })
                .collect();
            let max_deflection = samples.iter().copied().fold(0.0, f64::max);
            PlankSag { part: part.id, sagging: max_deflection > threshold, max_deflection, samples }
        })
        .collect();
    SagReport { threshold, planks }
}
