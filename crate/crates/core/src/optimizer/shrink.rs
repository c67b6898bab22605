use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::layout::{Layout, MultiLayout, PartShapes};

const MAX_CHAINS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShrinkAxis {
    X,
    Y,
}

impl ShrinkAxis {
    /// Index of the material-space size of `part` along this axis.
    pub fn size_of(self, part: usize) -> usize {
        match self {
            ShrinkAxis::X => 2 * part,
            ShrinkAxis::Y => 2 * part + 1,
        }
    }
}

/// Pixel contacts between parts along one axis, oriented from right to left
/// (top to bottom), plus the parts touching either side of the bounding box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contacts {
    pub axis: ShrinkAxis,
    pub pairs: BTreeSet<(usize, usize)>,
    pub start: BTreeSet<usize>,
    pub end: BTreeSet<usize>,
}

pub fn gather_contacts(layout: &Layout, shapes: &PartShapes, axis: ShrinkAxis) -> Contacts {
    let mut c = Contacts { axis, pairs: BTreeSet::new(), start: BTreeSet::new(), end: BTreeSet::new() };
    let Some(bb) = layout.bbox() else { return c };
    let owner = layout.owner_grid(shapes);
    let w = layout.width();
    let part_at = |x: usize, y: usize| owner[y * w + x].map(|k| layout.placements()[k as usize].part);
    for y in bb[1] as usize..bb[3] as usize {
        for x in bb[0] as usize..bb[2] as usize {
            let Some(p) = part_at(x, y) else { continue };
            let (lo, hi, prev) = match axis {
                ShrinkAxis::X => (x == bb[0] as usize, x + 1 == bb[2] as usize, (x > 0).then(|| part_at(x - 1, y)).flatten()),
                ShrinkAxis::Y => (y == bb[1] as usize, y + 1 == bb[3] as usize, (y > 0).then(|| part_at(x, y - 1)).flatten()),
            };
            if lo {
                c.end.insert(p);
            }
            if hi {
                c.start.insert(p);
            }
            if let Some(q) = prev {
                if q != p {
                    c.pairs.insert((p, q));
                }
            }
        }
    }
    c
}

/// Border-to-border locking chains (part ids from the right/top border to
/// the left/bottom one). Chains revisiting a part are dropped.
pub fn form_chains(c: &Contacts) -> Vec<Vec<usize>> {
    let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &c.pairs {
        next.entry(a).or_default().push(b);
    }
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = c.start.iter().rev().map(|&p| vec![p]).collect();
    while let Some(chain) = stack.pop() {
        if out.len() >= MAX_CHAINS {
            break;
        }
        let last = *chain.last().expect("chains are never empty");
        if c.end.contains(&last) {
            out.push(chain);
            continue;
        }
        for &q in next.get(&last).into_iter().flatten().rev() {
            if !chain.contains(&q) {
                let mut ext = chain.clone();
                ext.push(q);
                stack.push(ext);
            }
        }
    }
    out
}

/// Draws one size: first an occurrence count `o` with probability
/// proportional to the total occurrences of sizes having it, then a size
/// with that count, favoring weakly coupled ones.
pub(crate) fn draw_size<R: Rng>(chains: &[Vec<usize>], dep: &mut dyn FnMut(usize) -> usize, rng: &mut R) -> usize {
    let mut occ: BTreeMap<usize, usize> = BTreeMap::new();
    for ch in chains {
        for &s in ch.iter().collect::<BTreeSet<_>>() {
            *occ.entry(s).or_default() += 1;
        }
    }
    let mut by_occ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&s, &o) in &occ {
        by_occ.entry(o).or_default().push(s);
    }
    let levels: Vec<(&usize, &Vec<usize>)> = by_occ.iter().collect();
    let w1: Vec<f64> = levels.iter().map(|(o, sizes)| (**o * sizes.len()) as f64).collect();
    let (_, sizes) = levels[WeightedIndex::new(&w1).expect("positive occurrence weights").sample(rng)];
    if sizes.len() == 1 {
        return sizes[0];
    }
    let deps: Vec<f64> = sizes.iter().map(|&s| dep(s) as f64).collect();
    let total: f64 = deps.iter().sum();
    let w2: Vec<f64> = deps.iter().map(|d| 1.0 - d / total).collect();
    match WeightedIndex::new(&w2) {
        Ok(d) => sizes[d.sample(rng)],
        Err(_) => sizes[rng.random_range(0..sizes.len())],
    }
}

/// Sizes to shrink so that every locking chain loses at least one member.
/// `dep(s)` is the number of sizes moved when `s` alone changes.
pub fn select_part_sizes_to_shrink<R: Rng>(layout: &MultiLayout, shapes: &PartShapes, dep: &mut dyn FnMut(usize) -> usize, rng: &mut R) -> Vec<usize> {
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for board in &layout.boards {
        for axis in [ShrinkAxis::X, ShrinkAxis::Y] {
            let c = gather_contacts(board, shapes, axis);
            chains.extend(form_chains(&c).into_iter().map(|ch| ch.into_iter().map(|p| axis.size_of(p)).collect::<Vec<_>>()));
        }
    }
    let mut cache: BTreeMap<usize, usize> = BTreeMap::new();
    let mut dep_cached = |s: usize| *cache.entry(s).or_insert_with(|| dep(s));
    let mut selected = Vec::new();
    while !chains.is_empty() {
        let s = draw_size(&chains, &mut dep_cached, rng);
        selected.push(s);
        chains.retain(|ch| !ch.contains(&s));
    }
    selected
}
