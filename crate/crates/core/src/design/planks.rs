use super::{check_len, Axis, DesignError, DesignEvaluator, Part};

/// Variables per plank: center (cx, cy, cz) then world-axis lengths (lx, ly, lz).
pub const PLANK_VARS: usize = 6;
const SUFFIXES: [&str; PLANK_VARS] = ["cx", "cy", "cz", "lx", "ly", "lz"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlankSpec {
    pub name: String,
    pub normal: Axis,
    /// Optional outline in unit-square coordinates, scaled by the plank's
    /// in-plane lengths. `None` means a plain rectangle.
    pub profile: Option<Vec<[f64; 2]>>,
}

/// Axis-aligned planks whose centers and lengths are the configuration vector.
/// Design intent lives in a separate linear constraint system.
#[derive(Debug, Clone, PartialEq)]
pub struct PlankDesign {
    pub planks: Vec<PlankSpec>,
}

impl PlankDesign {
    pub fn new(planks: Vec<PlankSpec>) -> Self {
        Self { planks }
    }

    pub fn var_name(&self, plank: usize, slot: usize) -> String {
        format!("{}.{}", self.planks[plank].name, SUFFIXES[slot])
    }

    pub fn center_var(plank: usize, axis: Axis) -> usize {
        plank * PLANK_VARS + axis.index()
    }

    pub fn length_var(plank: usize, axis: Axis) -> usize {
        plank * PLANK_VARS + 3 + axis.index()
    }

    /// Whether variable `i` is a plank length.
    pub fn is_length_var(i: usize) -> bool {
        i % PLANK_VARS >= 3
    }

    pub fn thickness_var(&self, plank: usize) -> usize {
        Self::length_var(plank, self.planks[plank].normal)
    }
}

impl DesignEvaluator for PlankDesign {
    fn param_count(&self) -> usize {
        self.planks.len() * PLANK_VARS
    }

    fn part_count(&self) -> usize {
        self.planks.len()
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.planks.len())
            .flat_map(|p| (0..PLANK_VARS).map(move |s| (p, s)))
            .map(|(p, s)| self.var_name(p, s))
            .collect()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<Part>, DesignError> {
        check_len(self.param_count(), x)?;
        self.planks
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let v = &x[i * PLANK_VARS..(i + 1) * PLANK_VARS];
                let (a, b) = spec.normal.in_plane();
                let lx = v[3 + a.index()];
                let ly = v[3 + b.index()];
                if !(lx > 0.0 && ly > 0.0) {
                    return Err(DesignError::Degenerate { part: spec.name.clone(), lx, ly });
                }
                let contour = match &spec.profile {
                    Some(unit) => unit.iter().map(|p| [p[0] * lx, p[1] * ly]).collect(),
                    None => vec![[0.0, 0.0], [lx, 0.0], [lx, ly], [0.0, ly]],
                };
                Ok(Part {
                    id: i,
                    name: spec.name.clone(),
                    contour,
                    center: [v[0], v[1], v[2]],
                    lengths: [lx, ly],
                    thickness: v[3 + spec.normal.index()],
                    normal: spec.normal,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leg() -> PlankDesign {
        PlankDesign::new(vec![PlankSpec { name: "leg".into(), normal: Axis::X, profile: None }])
    }

    #[test]
    fn in_plane_lengths_come_from_non_normal_axes() {
        let d = leg();
        let parts = d.evaluate(&[0.0, 0.0, 50.0, 3.0, 80.0, 100.0]).unwrap();
        assert_eq!(parts[0].lengths, [80.0, 100.0]);
        assert_eq!(parts[0].thickness, 3.0);
        let (lo, hi) = parts[0].world_box();
        assert_eq!(lo, [-1.5, -40.0, 0.0]);
        assert_eq!(hi, [1.5, 40.0, 100.0]);
    }

    #[test]
    fn names_follow_plank_and_slot() {
        assert_eq!(leg().param_names(), ["leg.cx", "leg.cy", "leg.cz", "leg.lx", "leg.ly", "leg.lz"]);
    }

    #[test]
    fn zero_length_is_rejected() {
        let err = leg().evaluate(&[0.0, 0.0, 0.0, 3.0, 0.0, 10.0]).unwrap_err();
        assert!(matches!(err, DesignError::Degenerate { .. }));
    }

    #[test]
    fn profile_scales_with_lengths() {
        let d = PlankDesign::new(vec![PlankSpec {
            name: "tri".into(),
            normal: Axis::Z,
            profile: Some(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        }]);
        let p = &d.evaluate(&[0.0, 0.0, 0.0, 20.0, 10.0, 3.0]).unwrap()[0];
        assert_eq!(p.contour, vec![[0.0, 0.0], [20.0, 0.0], [0.0, 10.0]]);
        assert_eq!(p.contour_area(), 100.0);
    }
}
