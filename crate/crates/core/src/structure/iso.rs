//! Isomorphism by joint colour refinement and individualisation.
//!
//! Both structures are refined together so that colour ids mean the same
//! thing on each side. Annotations are ignored.

use std::collections::BTreeMap;

use super::Structure;
use crate::{Error, Result};

pub const DEFAULT_ISO_BUDGET: u64 = 1_000_000;

/// `mapping[x]` is the image in the second structure of element `x` of the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isomorphism {
    pub mapping: Vec<usize>,
}

/// Signature of one element under a colouring, comparable across structures.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Signature {
    color: usize,
    binary: Vec<(Vec<usize>, Vec<usize>)>,
    higher: Vec<(usize, Vec<Option<usize>>)>,
}

fn signature(s: &Structure, colors: &[usize], x: usize) -> Signature {
    let vocab = s.vocab();
    let mut binary = Vec::new();
    for rel in 0..vocab.len() {
        if vocab.arity(rel) != 2 {
            continue;
        }
        let mut out: Vec<usize> = s.out_neighbors(rel, x).iter().map(|&y| colors[y]).collect();
        let mut inn: Vec<usize> = s.in_neighbors(rel, x).iter().map(|&y| colors[y]).collect();
        out.sort_unstable();
        inn.sort_unstable();
        binary.push((out, inn));
    }
    let mut higher: Vec<(usize, Vec<Option<usize>>)> = s
        .incidence(x)
        .iter()
        .map(|&(rel, i)| {
            let t = &s.tuples(rel)[i];
            (rel, t.iter().map(|&y| (y != x).then(|| colors[y])).collect())
        })
        .collect();
    higher.sort_unstable();
    Signature { color: colors[x], binary, higher }
}

/// Refines both colourings to a common stable partition. `None` when the
/// colour histograms diverge, which rules out an isomorphism.
fn refine(
    a: &Structure,
    b: &Structure,
    mut ca: Vec<usize>,
    mut cb: Vec<usize>,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut classes = count_classes(&ca, &cb);
    loop {
        let sa: Vec<Signature> = a.elements().map(|x| signature(a, &ca, x)).collect();
        let sb: Vec<Signature> = b.elements().map(|x| signature(b, &cb, x)).collect();
        let mut names: BTreeMap<&Signature, usize> = BTreeMap::new();
        for sig in sa.iter().chain(sb.iter()) {
            names.entry(sig).or_insert(0);
        }
        for (i, v) in names.values_mut().enumerate() {
            *v = i;
        }
        ca = sa.iter().map(|s| names[s]).collect();
        cb = sb.iter().map(|s| names[s]).collect();
        if histogram(&ca) != histogram(&cb) {
            return None;
        }
        let next = names.len();
        if next == classes {
            return Some((ca, cb));
        }
        classes = next;
    }
}

fn count_classes(ca: &[usize], cb: &[usize]) -> usize {
    let mut all: Vec<usize> = ca.iter().chain(cb.iter()).copied().collect();
    all.sort_unstable();
    all.dedup();
    all.len()
}

fn histogram(colors: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &c in colors {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

fn initial_colors(a: &Structure, b: &Structure) -> (Vec<usize>, Vec<usize>) {
    let mut names: BTreeMap<u128, usize> = BTreeMap::new();
    for x in a.elements() {
        names.entry(a.labels(x)).or_insert(0);
    }
    for x in b.elements() {
        names.entry(b.labels(x)).or_insert(0);
    }
    for (i, v) in names.values_mut().enumerate() {
        *v = i;
    }
    (
        a.elements().map(|x| names[&a.labels(x)]).collect(),
        b.elements().map(|x| names[&b.labels(x)]).collect(),
    )
}

fn preserves(a: &Structure, b: &Structure, map: &[usize]) -> bool {
    if a.elements().any(|x| a.labels(x) != b.labels(map[x])) {
        return false;
    }
    (0..a.vocab().len()).all(|rel| {
        a.vocab().arity(rel) == 1
            || (a.tuples(rel).len() == b.tuples(rel).len()
                && a.tuples(rel).iter().all(|t| {
                    let image: Vec<usize> = t.iter().map(|&x| map[x]).collect();
                    b.holds(rel, &image)
                }))
    })
}

struct Search<'a> {
    a: &'a Structure,
    b: &'a Structure,
    budget: u64,
    explored: u64,
}

impl Search<'_> {
    fn run(&mut self, ca: Vec<usize>, cb: Vec<usize>) -> Result<Option<Vec<usize>>> {
        self.explored += 1;
        if self.explored > self.budget {
            return Err(Error::BudgetExceeded { explored: self.explored - 1 });
        }
        let Some((ca, cb)) = refine(self.a, self.b, ca, cb) else {
            return Ok(None);
        };
        let hist = histogram(&ca);
        let target = hist.iter().filter(|(_, &n)| n > 1).min_by_key(|(_, &n)| n).map(|(&c, _)| c);
        let Some(cell) = target else {
            let mut inverse: BTreeMap<usize, usize> = BTreeMap::new();
            for y in self.b.elements() {
                inverse.insert(cb[y], y);
            }
            let map: Vec<usize> = ca.iter().map(|c| inverse[c]).collect();
            return Ok(preserves(self.a, self.b, &map).then_some(map));
        };
        let fresh = ca.iter().chain(cb.iter()).max().map_or(0, |m| m + 1);
        let x = ca.iter().position(|&c| c == cell).expect("cell is non-empty");
        for y in self.b.elements().filter(|&y| cb[y] == cell) {
            let mut na = ca.clone();
            let mut nb = cb.clone();
            na[x] = fresh;
            nb[y] = fresh;
            if let Some(map) = self.run(na, nb)? {
                return Ok(Some(map));
            }
        }
        Ok(None)
    }
}

/// Finds an isomorphism, exploring at most `budget` search nodes.
pub fn are_isomorphic(a: &Structure, b: &Structure, budget: u64) -> Result<Option<Isomorphism>> {
    if a.vocab() != b.vocab() || a.len() != b.len() {
        return Ok(None);
    }
    if (0..a.vocab().len()).any(|r| a.tuples(r).len() != b.tuples(r).len()) {
        return Ok(None);
    }
    let (ca, cb) = initial_colors(a, b);
    let mut search = Search { a, b, budget, explored: 0 };
    Ok(search.run(ca, cb)?.map(|mapping| Isomorphism { mapping }))
}

/// Unbudgeted convenience form for small structures.
pub fn is_isomorphic(a: &Structure, b: &Structure) -> bool {
    are_isomorphic(a, b, u64::MAX).expect("unbounded budget").is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{cycle_graph, path_graph, StructureBuilder, P0};

    #[test]
    fn reflexive_and_simple_negatives() {
        let p = path_graph(3);
        let iso = are_isomorphic(&p, &p, 100).unwrap().unwrap();
        assert!(preserves(&p, &p, &iso.mapping));
        assert!(!is_isomorphic(&path_graph(3), &path_graph(4)));
        assert!(!is_isomorphic(&path_graph(4), &cycle_graph(4)));
    }

    #[test]
    fn regular_graphs_need_backtracking() {
        // Two triangles versus a hexagon: 2-regular, refinement alone cannot split.
        let tri = cycle_graph(3);
        let two = tri.disjoint_union(&tri).unwrap();
        assert!(!is_isomorphic(&two, &cycle_graph(6)));
        // A relabelled hexagon.
        let mut b = StructureBuilder::colored_graph();
        b.add_elements(6);
        for (x, y) in [(0, 3), (3, 1), (1, 4), (4, 2), (2, 5), (5, 0)] {
            b.add_edge(x, y).unwrap();
        }
        assert!(is_isomorphic(&b.build().unwrap(), &cycle_graph(6)));
    }

    #[test]
    fn colors_matter_annotations_do_not() {
        let mut b = StructureBuilder::colored_graph();
        b.add_elements(2);
        b.add_edge(0, 1).unwrap();
        b.set_label(0, P0).unwrap();
        let colored = b.build().unwrap();
        assert!(!is_isomorphic(&colored, &path_graph(2)));
        let mut b = StructureBuilder::from_structure(&colored);
        b.set_annotation(1, crate::Annotation::role(crate::Role::SourceS));
        assert!(is_isomorphic(&b.build().unwrap(), &colored));
    }

    #[test]
    fn budget_is_reported() {
        let c = cycle_graph(8);
        assert!(matches!(are_isomorphic(&c, &c, 1), Err(Error::BudgetExceeded { .. })));
    }
}
