use super::{check_len, Axis, DesignError, DesignEvaluator, Part};

/// `constant + Σ coef · x[var]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn var(i: usize) -> Self {
        Self { constant: 0.0, terms: vec![(i, 1.0)] }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    /// `self + k · other`.
    pub fn add_scaled(&self, other: &Affine, k: f64) -> Affine {
        let mut out = self.clone();
        out.constant += k * other.constant;
        for &(i, c) in &other.terms {
            match out.terms.iter_mut().find(|t| t.0 == i) {
                Some(t) => t.1 += k * c,
                None => out.terms.push((i, k * c)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricPart {
    pub name: String,
    pub normal: Axis,
    pub center: [Affine; 3],
    /// Outline vertices; the part frame is the outline's bounding box.
    pub contour: Vec<[Affine; 2]>,
}

/// A handful of named parameters driving part outlines through affine
/// expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricDesign {
    pub names: Vec<String>,
    pub parts: Vec<ParametricPart>,
    pub thickness: f64,
}

impl DesignEvaluator for ParametricDesign {
    fn param_count(&self) -> usize {
        self.names.len()
    }

    fn part_count(&self) -> usize {
        self.parts.len()
    }

    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<Part>, DesignError> {
        check_len(self.param_count(), x)?;
        self.parts
            .iter()
            .enumerate()
            .map(|(id, p)| {
                let pts: Vec<[f64; 2]> = p.contour.iter().map(|v| [v[0].eval(x), v[1].eval(x)]).collect();
                let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                for q in &pts {
                    for k in 0..2 {
                        lo[k] = lo[k].min(q[k]);
                        hi[k] = hi[k].max(q[k]);
                    }
                }
                let lx = hi[0] - lo[0];
                let ly = hi[1] - lo[1];
                if !(lx > 0.0 && ly > 0.0) {
                    return Err(DesignError::Degenerate { part: p.name.clone(), lx, ly });
                }
                let mut contour: Vec<[f64; 2]> = pts.iter().map(|q| [q[0] - lo[0], q[1] - lo[1]]).collect();
                if super::polygon_area(&contour) < 0.0 {
                    contour.reverse();
                }
                Ok(Part {
                    id,
                    name: p.name.clone(),
                    contour,
                    center: [p.center[0].eval(x), p.center[1].eval(x), p.center[2].eval(x)],
                    lengths: [lx, ly],
                    thickness: self.thickness,
                    normal: p.normal,
                })
            })
            .collect()
    }
}
