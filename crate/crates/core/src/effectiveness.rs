//! Non-linear effectiveness constraints (no sagging, clear inner volumes,
//! fit volume) enforced by bisection along the edit and dynamic equality
//! rows.

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintKind, ConstraintRow, ConstraintSystem, CorrectionResult, CorrectionStatus};
use crate::design::{DesignError, DesignEvaluator, Part, FD_STEP_MM};
use crate::fem::{analyze_sag, LoadSpec};

/// Bisection resolution along the edit.
pub const EPS_ALPHA: f64 = 1e-3;
/// Frozen span length after a sag violation, relative to the last good length.
pub const SAG_MARGIN: f64 = 0.02;
pub const MAX_RECURSION: usize = 16;
/// Geometric tolerance (mm) below which an intrusion is ignored.
const GEOM_TOL: f64 = 1e-6;

/// Clear box of height `height` above the top face of part `support`,
/// spanning the support's footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerVolume {
    pub support: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitVolume {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffectivenessSpec {
    pub inner_volumes: Vec<InnerVolume>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load_spec: Option<LoadSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_volume: Option<FitVolume>,
}

impl EffectivenessSpec {
    pub fn is_empty(&self) -> bool {
        self.inner_volumes.is_empty() && self.load_spec.is_none() && self.fit_volume.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Sag,
    InnerVolume,
    FitVolume,
}

/// How a violation can be repaired by a dynamic row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum DynamicRule {
    /// Freeze in-plane length `axis` (0 or 1) of `part`.
    FreezeSpan { part: usize, axis: usize },
    /// Keep the bottom of `part` exactly `height` above the top of `support`.
    KeepGap { support: usize, part: usize, height: f64 },
    /// Pin a face of `part` onto the fit-volume boundary.
    PinFace { part: usize, axis: usize, upper: bool, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub parts: Vec<usize>,
    pub magnitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<DynamicRule>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EffectivenessVerdict {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl EffectivenessVerdict {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self { ok: violations.is_empty(), violations }
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    a1.min(b1) - a0.max(b0)
}

/// Geometric and structural checks on already evaluated parts.
pub fn check_parts(parts: &[Part], spec: &EffectivenessSpec) -> EffectivenessVerdict {
    let mut violations = Vec::new();
    let boxes: Vec<_> = parts.iter().map(|p| p.world_box()).collect();

    for vol in &spec.inner_volumes {
        let Some(&(slo, shi)) = boxes.get(vol.support) else { continue };
        let (z0, z1) = (shi[2], shi[2] + vol.height);
        for (i, (lo, hi)) in boxes.iter().enumerate() {
            if i == vol.support {
                continue;
            }
            let inside = overlap(lo[0], hi[0], slo[0], shi[0]) > GEOM_TOL
                && overlap(lo[1], hi[1], slo[1], shi[1]) > GEOM_TOL
                && overlap(lo[2], hi[2], z0, z1) > GEOM_TOL;
            if inside {
                let gap = lo[2] - shi[2];
                violations.push(Violation {
                    kind: ViolationKind::InnerVolume,
                    parts: vec![vol.support, i],
                    magnitude: vol.height - gap,
                    rule: Some(DynamicRule::KeepGap { support: vol.support, part: i, height: vol.height }),
                });
            }
        }
    }

    if let Some(fit) = &spec.fit_volume {
        for (i, (lo, hi)) in boxes.iter().enumerate() {
            for k in 0..3 {
                if lo[k] < fit.min[k] - GEOM_TOL {
                    violations.push(Violation {
                        kind: ViolationKind::FitVolume,
                        parts: vec![i],
                        magnitude: fit.min[k] - lo[k],
                        rule: Some(DynamicRule::PinFace { part: i, axis: k, upper: false, bound: fit.min[k] }),
                    });
                }
                if hi[k] > fit.max[k] + GEOM_TOL {
                    violations.push(Violation {
                        kind: ViolationKind::FitVolume,
                        parts: vec![i],
                        magnitude: hi[k] - fit.max[k],
                        rule: Some(DynamicRule::PinFace { part: i, axis: k, upper: true, bound: fit.max[k] }),
                    });
                }
            }
        }
    }

    if let Some(load) = &spec.load_spec {
        match analyze_sag(parts, load) {
            Ok(report) => {
                for plank in report.planks.iter().filter(|p| p.sagging) {
                    let part = &parts[plank.part];
                    let axis = if part.lengths[0] >= part.lengths[1] { 0 } else { 1 };
                    violations.push(Violation {
                        kind: ViolationKind::Sag,
                        parts: vec![plank.part],
                        magnitude: plank.max_deflection,
                        rule: Some(DynamicRule::FreezeSpan { part: plank.part, axis }),
                    });
                }
            }
            Err(_) => violations.push(Violation {
                kind: ViolationKind::Sag,
                parts: (0..parts.len()).collect(),
                magnitude: f64::INFINITY,
                rule: None,
            }),
        }
    }

    EffectivenessVerdict::from_violations(violations)
}

pub fn check_effectiveness(eval: &dyn DesignEvaluator, x: &[f64], spec: &EffectivenessSpec) -> Result<EffectivenessVerdict, DesignError> {
    if spec.is_empty() {
        eval.evaluate(x)?;
        return Ok(EffectivenessVerdict { ok: true, violations: Vec::new() });
    }
    Ok(check_parts(&eval.evaluate(x)?, spec))
}

fn is_effective(eval: &dyn DesignEvaluator, x: &[f64], spec: &EffectivenessSpec) -> bool {
    matches!(check_effectiveness(eval, x, spec), Ok(v) if v.ok)
}

/// First-order row `g · X = target − f(x0) + g · x0` for a scalar geometric
/// quantity `f`, with `g` by central differences.
fn linearize(
    eval: &dyn DesignEvaluator,
    x0: &[f64],
    f: &dyn Fn(&[Part]) -> f64,
    target: f64,
) -> Result<(Vec<(usize, f64)>, f64), DesignError> {
    let h = FD_STEP_MM;
    let f0 = f(&eval.evaluate(x0)?);
    let mut terms = Vec::new();
    let mut p = x0.to_vec();
    for j in 0..x0.len() {
        p[j] = x0[j] + h;
        let fp = f(&eval.evaluate(&p)?);
        p[j] = x0[j] - h;
        let fm = f(&eval.evaluate(&p)?);
        p[j] = x0[j];
        let g = (fp - fm) / (2.0 * h);
        if g.abs() >= 1e-9 {
            terms.push((j, g));
        }
    }
    let rhs = target - f0 + terms.iter().map(|&(j, g)| g * x0[j]).sum::<f64>();
    Ok((terms, rhs))
}

fn same_row(a: &ConstraintRow, terms: &[(usize, f64)], target: f64) -> bool {
    a.terms.len() == terms.len()
        && a.terms.iter().zip(terms).all(|(p, q)| p.0 == q.0 && (p.1 - q.1).abs() < 1e-9)
        && (a.target - target).abs() < 1e-9
}

/// Inserts one row per repairable violation at `x_after`. Returns the system
/// unchanged when nothing new applies.
pub fn add_dynamic_constraints(
    eval: &dyn DesignEvaluator,
    x_before: &[f64],
    x_after: &[f64],
    system: &ConstraintSystem,
    verdict: &EffectivenessVerdict,
    tag: u32,
) -> ConstraintSystem {
    let mut out = system.clone();
    let Ok(before) = eval.evaluate(x_before) else { return out };
    for v in &verdict.violations {
        let Some(rule) = &v.rule else { continue };
        let (kind, f, target): (ConstraintKind, Box<dyn Fn(&[Part]) -> f64>, f64) = match *rule {
            DynamicRule::FreezeSpan { part, axis } => {
                let Some(p) = before.get(part) else { continue };
                (ConstraintKind::FixedLength, Box::new(move |ps: &[Part]| ps[part].lengths[axis]), (1.0 - SAG_MARGIN) * p.lengths[axis])
            }
            DynamicRule::KeepGap { support, part, height } => (
                ConstraintKind::EqualPosition,
                Box::new(move |ps: &[Part]| ps[part].world_box().0[2] - ps[support].world_box().1[2]),
                height,
            ),
            DynamicRule::PinFace { part, axis, upper, bound } => (
                ConstraintKind::FitVolume,
                Box::new(move |ps: &[Part]| {
                    let (lo, hi) = ps[part].world_box();
                    if upper { hi[axis] } else { lo[axis] }
                }),
                bound,
            ),
        };
        let Ok((terms, rhs)) = linearize(eval, x_after, f.as_ref(), target) else { continue };
        if terms.is_empty() || out.rows.iter().any(|r| same_row(r, &terms, rhs)) {
            continue;
        }
        out.push(ConstraintRow { kind, terms, target: rhs, dynamic_tag: Some(tag) });
    }
    out
}

/// Outcome of the effectiveness enforcement, with bisection diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessOutcome {
    pub result: CorrectionResult,
    /// `(l, r)` at each dynamic-row insertion.
    pub brackets: Vec<(f64, f64)>,
    pub depth: usize,
    /// Rows inserted during the call (already discarded from the system).
    pub dynamic_rows: Vec<ConstraintRow>,
}

fn scaled(u: &[f64], a: f64) -> Vec<f64> {
    u.iter().map(|v| a * v).collect()
}

/// Design correction of `u` that also keeps the design effective. The input
/// system is never modified; rows added on the way are discarded.
pub fn dynamic_effectiveness_constraints(
    eval: &dyn DesignEvaluator,
    system: &ConstraintSystem,
    spec: &EffectivenessSpec,
    x: &[f64],
    u: &[f64],
    alpha: f64,
) -> EffectivenessOutcome {
    let mut working = system.clone();
    let mut brackets = Vec::new();
    let mut alpha = alpha;
    let mut depth = 0;
    let accept = |working: &ConstraintSystem, a: f64| -> Option<CorrectionResult> {
        let m = scaled(u, a);
        let d = working.correct(x, &m, &[]);
        (d.is_solved() && is_effective(eval, &d.apply(x, &m), spec)).then_some(d)
    };
    // Last point known to satisfy the static system and E.
    let mut best: (f64, CorrectionResult) = match accept(&working, alpha) {
        Some(d) => (alpha, d),
        None => (0.0, CorrectionResult { d: vec![0.0; x.len()], scale: 0.0, active_set: Vec::new(), residual: system.residual_norm(x), status: CorrectionStatus::Solved }),
    };
    loop {
        let full = working.correct(x, u, &[]);
        if !full.is_solved() && depth == 0 {
            return EffectivenessOutcome { result: full, brackets, depth, dynamic_rows: Vec::new() };
        }
        if full.is_solved() && is_effective(eval, &full.apply(x, u), spec) {
            let dynamic_rows = working.rows[system.rows.len()..].to_vec();
            return EffectivenessOutcome { result: full, brackets, depth, dynamic_rows };
        }

        let mut l = alpha;
        let mut r = 1.0;
        while (l - r).abs() > EPS_ALPHA {
            let mid = (l + r) / 2.0;
            match accept(&working, mid) {
                Some(d) => {
                    l = mid;
                    if mid >= best.0 {
                        best = (mid, d);
                    }
                }
                None => r = mid,
            }
        }
        let partial = |best: (f64, CorrectionResult), working: &ConstraintSystem, brackets, depth| {
            let (scale, mut result) = best;
            result.scale = scale;
            result.status = CorrectionStatus::Failed;
            EffectivenessOutcome { result, brackets, depth, dynamic_rows: working.rows[system.rows.len()..].to_vec() }
        };
        if !full.is_solved() || depth >= MAX_RECURSION {
            return partial(best, &working, brackets, depth);
        }

        let ul = scaled(u, l);
        let xl = working.correct(x, &ul, &[]).apply(x, &ul);
        let ur = scaled(u, r);
        let xr = working.correct(x, &ur, &[]).apply(x, &ur);
        let verdict = check_effectiveness(eval, &xr, spec).unwrap_or_default();
        let next = add_dynamic_constraints(eval, &xl, &xr, &working, &verdict, depth as u32 + 1);
        brackets.push((l, r));
        if next.rows.len() == working.rows.len() {
            return partial(best, &working, brackets, depth);
        }
        working = next;
        alpha = l;
        depth += 1;
    }
}
