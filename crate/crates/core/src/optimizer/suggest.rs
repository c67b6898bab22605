use super::ExplorationResult;
use crate::design::{DesignError, DesignEvaluator};

/// In-plane lengths of every part, concatenated.
pub fn plank_lengths(eval: &dyn DesignEvaluator, x: &[f64]) -> Result<Vec<f64>, DesignError> {
    Ok(eval.evaluate(x)?.iter().flat_map(|p| p.lengths).collect())
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum()
}

/// Greedy farthest-point pick of `n` indices in length space, starting from
/// the lowest-wastage point. Ties go to the lower index.
pub fn farthest_points(points: &[Vec<f64>], wastage: &[f64], n: usize) -> Vec<usize> {
    if points.is_empty() || n == 0 {
        return Vec::new();
    }
    let first = (0..points.len()).min_by(|&a, &b| wastage[a].total_cmp(&wastage[b])).expect("nonempty");
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = points.iter().map(|p| dist2(p, &points[first])).collect();
    while chosen.len() < n.min(points.len()) {
        let mut best: Option<usize> = None;
        for i in 0..points.len() {
            if chosen.contains(&i) {
                continue;
            }
            if best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("unchosen point remains");
        chosen.push(b);
        for i in 0..points.len() {
            nearest[i] = nearest[i].min(dist2(&points[i], &points[b]));
        }
    }
    chosen
}

/// Picks up to `n` diverse results, best first.
pub fn select_suggestions(eval: &dyn DesignEvaluator, results: &[ExplorationResult], n: usize) -> Result<Vec<usize>, DesignError> {
    let points = results.iter().map(|r| plank_lengths(eval, &r.params.values)).collect::<Result<Vec<_>, _>>()?;
    let wastage: Vec<f64> = results.iter().map(|r| r.wastage).collect();
    Ok(farthest_points(&points, &wastage, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_n_returns_all() {
        let pts = vec![vec![0.0], vec![1.0], vec![5.0]];
        let mut s = farthest_points(&pts, &[0.3, 0.1, 0.2], 3);
        assert_eq!(s[0], 1);
        s.sort();
        assert_eq!(s, vec![0, 1, 2]);
    }

    #[test]
    fn duplicates_wait_for_distinct_points() {
        let pts = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]];
        let s = farthest_points(&pts, &[0.1, 0.1, 0.2, 0.3], 2);
        assert_eq!(s, vec![0, 3]);
    }

    #[test]
    fn line_picks_both_extremes_after_the_best() {
        let pts: Vec<Vec<f64>> = [2.0, 0.0, 4.0, 1.0, 3.0].iter().map(|&t| vec![t, 2.0 * t]).collect();
        let w = [0.05, 0.2, 0.3, 0.1, 0.15];
        let s = farthest_points(&pts, &w, 3);
        assert_eq!(s[0], 0);
        // Brute force: the 3-subset containing the best point that maximizes
        // the minimum pairwise distance.
        let mut best = (f64::MIN, vec![]);
        for a in 1..5 {
            for b in a + 1..5 {
                let set = [0, a, b];
                let mut m = f64::MAX;
                for i in 0..3 {
                    for j in i + 1..3 {
                        m = m.min(dist2(&pts[set[i]], &pts[set[j]]));
                    }
                }
                if m > best.0 {
                    best = (m, vec![a, b]);
                }
            }
        }
        let mut rest = s[1..].to_vec();
        rest.sort();
        assert_eq!(rest, best.1);
        assert_eq!(rest, vec![1, 2]);
    }
}
