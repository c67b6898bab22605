use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DocumentError;
use crate::constraints::{ConstraintKind, ConstraintRow, ConstraintSystem};
use crate::design::{Affine, Axis, Design, DesignEvaluator, ParametricDesign, ParametricPart, PlankDesign, PlankSpec};
use crate::effectiveness::EffectivenessSpec;
use crate::optimizer::Problem;

pub const SCHEMA_VERSION: u32 = 1;

/// A design with its constraints, effectiveness spec and master boards, as
/// stored in `.design.json` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDocument {
    pub schema: u32,
    pub name: String,
    pub material: MaterialDoc,
    pub boards: Vec<BoardDoc>,
    pub design: DesignDoc,
    pub parameters: Vec<ParameterDoc>,
    /// Named affine expressions that parametric coordinates may refer to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expressions: Vec<ExpressionDoc>,
    pub constraints: Vec<ConstraintDoc>,
    #[serde(default)]
    pub effectiveness: EffectivenessSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDoc {
    /// Sheet thickness in mm.
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardDoc {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DesignDoc {
    Planks { planks: Vec<PlankDoc> },
    Parametric { parts: Vec<ParametricPartDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlankDoc {
    pub name: String,
    pub normal: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricPartDoc {
    pub name: String,
    pub normal: Axis,
    pub center: [AffineDoc; 3],
    pub contour: Vec<[AffineDoc; 2]>,
}

/// `constant + Σ coef · name`, where a name is a parameter or an earlier
/// named expression.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineDoc {
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionDoc {
    pub name: String,
    pub expr: AffineDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterDoc {
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub kind: ConstraintKind,
    pub terms: Vec<(String, f64)>,
    pub target: f64,
}

/// Parses and validates a design document.
pub fn load_design(bytes: &[u8]) -> Result<DesignDocument, DocumentError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: DesignDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        DocumentError::new(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    doc.validate()?;
    Ok(doc)
}

/// Canonical bytes: pretty JSON in declaration order with a final newline.
pub fn save_design(doc: &DesignDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("documents always serialize");
    out.push(b'\n');
    out
}

impl DesignDocument {
    /// Checks everything the type system cannot: positive boards, known
    /// names, parameter lists matching the design.
    pub fn validate(&self) -> Result<(), DocumentError> {
        if self.schema != SCHEMA_VERSION {
            return Err(DocumentError::new("schema", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if !(self.material.thickness > 0.0) {
            return Err(DocumentError::new("material.thickness", "must be positive"));
        }
        if self.boards.is_empty() {
            return Err(DocumentError::new("boards", "at least one board is required"));
        }
        for (i, b) in self.boards.iter().enumerate() {
            if !(b.width > 0.0) {
                return Err(DocumentError::new(format!("boards[{i}].width"), "must be positive"));
            }
            if !(b.height > 0.0) {
                return Err(DocumentError::new(format!("boards[{i}].height"), "must be positive"));
            }
        }
        self.to_problem().map(|_| ())
    }

    fn parameter_index(&self) -> Result<BTreeMap<&str, usize>, DocumentError> {
        let mut index = BTreeMap::new();
        for (i, p) in self.parameters.iter().enumerate() {
            if index.insert(p.name.as_str(), i).is_some() {
                return Err(DocumentError::new(format!("parameters[{i}].name"), format!("duplicate parameter `{}`", p.name)));
            }
            if !p.value.is_finite() {
                return Err(DocumentError::new(format!("parameters[{i}].value"), "must be finite"));
            }
        }
        Ok(index)
    }

    fn expressions(&self, params: &BTreeMap<&str, usize>) -> Result<BTreeMap<String, Affine>, DocumentError> {
        let mut out: BTreeMap<String, Affine> = BTreeMap::new();
        for (i, e) in self.expressions.iter().enumerate() {
            let path = format!("expressions[{i}]");
            if params.contains_key(e.name.as_str()) || out.contains_key(&e.name) {
                return Err(DocumentError::new(format!("{path}.name"), format!("`{}` is already defined", e.name)));
            }
            let a = resolve(&e.expr, params, &out, &format!("{path}.expr"))?;
            out.insert(e.name.clone(), a);
        }
        Ok(out)
    }

    /// The optimization problem and start point described by the document.
    pub fn to_problem(&self) -> Result<(Problem, Vec<f64>), DocumentError> {
        let params = self.parameter_index()?;
        let exprs = self.expressions(&params)?;
        let names: Vec<String> = self.parameters.iter().map(|p| p.name.clone()).collect();
        let design = match &self.design {
            DesignDoc::Planks { planks } => {
                let d = PlankDesign::new(planks.iter().map(|p| PlankSpec { name: p.name.clone(), normal: p.normal, profile: p.profile.clone() }).collect());
                let expected = d.param_names();
                if expected.len() != names.len() {
                    return Err(DocumentError::new("parameters", format!("expected {} plank parameters, found {}", expected.len(), names.len())));
                }
                if let Some(i) = (0..names.len()).find(|&i| names[i] != expected[i]) {
                    return Err(DocumentError::new(format!("parameters[{i}].name"), format!("expected `{}`, found `{}`", expected[i], names[i])));
                }
                for (i, p) in planks.iter().enumerate() {
                    if let Some(profile) = &p.profile {
                        if profile.len() < 3 {
                            return Err(DocumentError::new(format!("design.planks[{i}].profile"), "needs at least three vertices"));
                        }
                    }
                }
                Design::Planks(d)
            }
            DesignDoc::Parametric { parts } => {
                let mut out = Vec::with_capacity(parts.len());
                for (i, p) in parts.iter().enumerate() {
                    let path = format!("design.parts[{i}]");
                    let center = [
                        resolve(&p.center[0], &params, &exprs, &format!("{path}.center[0]"))?,
                        resolve(&p.center[1], &params, &exprs, &format!("{path}.center[1]"))?,
                        resolve(&p.center[2], &params, &exprs, &format!("{path}.center[2]"))?,
                    ];
                    if p.contour.len() < 3 {
                        return Err(DocumentError::new(format!("{path}.contour"), "needs at least three vertices"));
                    }
                    let contour = p
                        .contour
                        .iter()
                        .enumerate()
                        .map(|(k, v)| {
                            Ok([
                                resolve(&v[0], &params, &exprs, &format!("{path}.contour[{k}][0]"))?,
                                resolve(&v[1], &params, &exprs, &format!("{path}.contour[{k}][1]"))?,
                            ])
                        })
                        .collect::<Result<Vec<_>, DocumentError>>()?;
                    out.push(ParametricPart { name: p.name.clone(), normal: p.normal, center, contour });
                }
                Design::Parametric(ParametricDesign { names: names.clone(), parts: out, thickness: self.material.thickness })
            }
        };

        let mut system = ConstraintSystem::new(names.len());
        for (i, p) in self.parameters.iter().enumerate() {
            system.min_lengths[i] = p.min;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let mut terms = Vec::with_capacity(c.terms.len());
            for (k, (name, coef)) in c.terms.iter().enumerate() {
                let Some(&v) = params.get(name.as_str()) else {
                    return Err(DocumentError::new(format!("constraints[{i}].terms[{k}]"), format!("unknown parameter `{name}`")));
                };
                terms.push((v, *coef));
            }
            system.push(ConstraintRow::new(c.kind, terms, c.target));
        }

        let part_count = design.part_count();
        for (i, v) in self.effectiveness.inner_volumes.iter().enumerate() {
            if v.support >= part_count {
                return Err(DocumentError::new(format!("effectiveness.inner_volumes[{i}].support"), format!("no part {}", v.support)));
            }
        }
        if let Some(ls) = &self.effectiveness.load_spec {
            for (i, l) in ls.loads.iter().enumerate() {
                if l.part >= part_count {
                    return Err(DocumentError::new(format!("effectiveness.load_spec.loads[{i}].part"), format!("no part {}", l.part)));
                }
            }
        }

        let x: Vec<f64> = self.parameters.iter().map(|p| p.value).collect();
        design.evaluate(&x).map_err(|e| DocumentError::new("parameters", e.to_string()))?;
        let problem = Problem { design, system, spec: self.effectiveness.clone(), boards: self.boards.iter().map(|b| [b.width, b.height]).collect() };
        Ok((problem, x))
    }

    /// Document for `problem` at `x`. Dynamic rows are not part of a
    /// document and are dropped.
    pub fn from_problem(name: &str, thickness: f64, problem: &Problem, x: &[f64]) -> DesignDocument {
        let names = problem.design.param_names();
        let affine = |a: &Affine| AffineDoc { constant: a.constant, terms: a.terms.iter().map(|&(i, c)| (names[i].clone(), c)).collect() };
        let design = match &problem.design {
            Design::Planks(d) => DesignDoc::Planks {
                planks: d.planks.iter().map(|p| PlankDoc { name: p.name.clone(), normal: p.normal, profile: p.profile.clone() }).collect(),
            },
            Design::Parametric(d) => DesignDoc::Parametric {
                parts: d
                    .parts
                    .iter()
                    .map(|p| ParametricPartDoc {
                        name: p.name.clone(),
                        normal: p.normal,
                        center: [affine(&p.center[0]), affine(&p.center[1]), affine(&p.center[2])],
                        contour: p.contour.iter().map(|v| [affine(&v[0]), affine(&v[1])]).collect(),
                    })
                    .collect(),
            },
        };
        let thickness = match &problem.design {
            Design::Parametric(d) => d.thickness,
            Design::Planks(_) => thickness,
        };
        DesignDocument {
            schema: SCHEMA_VERSION,
            name: name.to_string(),
            material: MaterialDoc { thickness },
            boards: problem.boards.iter().map(|b| BoardDoc { width: b[0], height: b[1] }).collect(),
            design,
            parameters: names
                .iter()
                .enumerate()
                .map(|(i, n)| ParameterDoc { name: n.clone(), value: x[i], min: problem.system.min_lengths[i] })
                .collect(),
            expressions: Vec::new(),
            constraints: problem
                .system
                .rows
                .iter()
                .filter(|r| r.dynamic_tag.is_none())
                .map(|r| ConstraintDoc { kind: r.kind, terms: r.terms.iter().map(|&(i, c)| (names[i].clone(), c)).collect(), target: r.target })
                .collect(),
            effectiveness: problem.spec.clone(),
        }
    }

    /// Same document with new parameter values.
    pub fn with_values(&self, x: &[f64]) -> DesignDocument {
        let mut d = self.clone();
        for (p, &v) in d.parameters.iter_mut().zip(x) {
            p.value = v;
        }
        d
    }

    pub fn values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }
}

fn resolve(a: &AffineDoc, params: &BTreeMap<&str, usize>, exprs: &BTreeMap<String, Affine>, path: &str) -> Result<Affine, DocumentError> {
    let mut out = Affine::constant(a.constant);
    for (k, (name, coef)) in a.terms.iter().enumerate() {
        let term = if let Some(&i) = params.get(name.as_str()) {
            Affine::var(i)
        } else if let Some(e) = exprs.get(name) {
            e.clone()
        } else {
            return Err(DocumentError::new(format!("{path}.terms[{k}]"), format!("unknown parameter or expression `{name}`")));
        };
        out = out.add_scaled(&term, *coef);
    }
    Ok(out)
}
