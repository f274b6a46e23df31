//! k-bags and their canonical isomorphism classes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::structure::{Annotation, Vocabulary};

/// One local element of a bag.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BagElement {
    /// Unary relations, one bit per vocabulary index.
    #[serde(default)]
    pub labels: u128,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_mark: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_mark: Option<usize>,
    #[serde(default, skip_serializing_if = "Annotation::is_plain")]
    pub annotation: Annotation,
}

/// A bag: local elements `0..len()` with relation tuples and interface marks.
///
/// Tuples of arity ≥ 2 only; unary facts live in [`BagElement::labels`].
/// Symmetric binary tuples are kept as `(min, max)` after [`KBag::normalize`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KBag {
    pub elements: Vec<BagElement>,
    #[serde(default)]
    pub tuples: Vec<(usize, Vec<usize>)>,
}

impl KBag {
    pub fn with_elements(n: usize) -> Self {
        Self { elements: vec![BagElement::default(); n], tuples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn add_tuple(&mut self, rel: usize, tuple: Vec<usize>) {
        self.tuples.push((rel, tuple));
    }

    pub fn set_label(&mut self, x: usize, rel: usize) {
        self.elements[x].labels |= 1u128 << rel;
    }

    /// Element carrying the in-mark `i`, if any.
    pub fn in_marked(&self, i: usize) -> Option<usize> {
        self.elements.iter().position(|e| e.in_mark == Some(i))
    }

    pub fn out_marked(&self, i: usize) -> Option<usize> {
        self.elements.iter().position(|e| e.out_mark == Some(i))
    }

    pub fn in_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements.iter().filter_map(|e| e.in_mark)
    }

    pub fn out_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements.iter().filter_map(|e| e.out_mark)
    }

    /// Sorts and deduplicates tuples, orienting symmetric pairs as `(min, max)`.
    pub fn normalize(&mut self, vocab: &Vocabulary) {
        for (rel, t) in &mut self.tuples {
            if vocab.is_symmetric(*rel) && t.len() == 2 && t[0] > t[1] {
                t.swap(0, 1);
            }
        }
        self.tuples.sort();
        self.tuples.dedup();
    }

    /// The isomorphism class of this bag as a Λ_k-structure (annotations ignored).
    pub fn class(&self, vocab: &Vocabulary) -> BagClass {
        BagClass::of(self, vocab)
    }
}

/// Canonical form of a bag: the bag relabelled by the lexicographically least
/// ordering among those compatible with its stable refinement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BagClass {
    pub elements: Vec<(u128, Option<usize>, Option<usize>)>,
    pub tuples: Vec<(usize, Vec<usize>)>,
}

impl BagClass {
    fn of(bag: &KBag, vocab: &Vocabulary) -> Self {
        let n = bag.len();
        let mut colors = initial_colors(bag);
        loop {
            let sigs: Vec<(usize, Vec<(usize, Vec<Option<usize>>)>)> = (0..n)
                .map(|x| {
                    let mut around: Vec<(usize, Vec<Option<usize>>)> = bag
                        .tuples
                        .iter()
                        .filter(|(_, t)| t.contains(&x))
                        .map(|(rel, t)| {
                            let mut v: Vec<Option<usize>> =
                                t.iter().map(|&y| (y != x).then(|| colors[y])).collect();
                            // Stored orientation of a symmetric pair is id-dependent.
                            if vocab.is_symmetric(*rel) {
                                v.sort();
                            }
                            (*rel, v)
                        })
                        .collect();
                    around.sort();
                    (colors[x], around)
                })
                .collect();
            let next = rank(&sigs);
            let stable = distinct(&next) == distinct(&colors);
            colors = next;
            if stable {
                break;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&x| colors[x]);
        let cells: Vec<(usize, usize)> = {
            let mut cells = Vec::new();
            let mut start = 0;
            while start < n {
                let mut end = start + 1;
                while end < n && colors[order[end]] == colors[order[start]] {
                    end += 1;
                }
                cells.push((start, end));
                start = end;
            }
            cells
        };
        let elements: Vec<(u128, Option<usize>, Option<usize>)> = order
            .iter()
            .map(|&x| {
                let e = &bag.elements[x];
                (e.labels, e.in_mark, e.out_mark)
            })
            .collect();
        let mut best: Option<Vec<(usize, Vec<usize>)>> = None;
        permute_cells(&mut order, &cells, 0, &mut |order| {
            let mut position = vec![0; n];
            for (i, &x) in order.iter().enumerate() {
                position[x] = i;
            }
            let mut tuples: Vec<(usize, Vec<usize>)> = bag
                .tuples
                .iter()
                .map(|(rel, t)| (*rel, t.iter().map(|&y| position[y]).collect()))
                .collect();
            for (rel, t) in &mut tuples {
                if vocab.is_symmetric(*rel) && t[0] > t[1] {
                    t.swap(0, 1);
                }
            }
            tuples.sort();
            tuples.dedup();
            if best.as_ref().is_none_or(|b| tuples < *b) {
                best = Some(tuples);
            }
        });
        BagClass { elements, tuples: best.unwrap_or_default() }
    }

    /// A bag realising this class, with canonical local ids and no annotations.
    pub fn representative(&self) -> KBag {
        KBag {
            elements: self
                .elements
                .iter()
                .map(|&(labels, in_mark, out_mark)| BagElement {
                    labels,
                    in_mark,
                    out_mark,
                    annotation: Annotation::plain(),
                })
                .collect(),
            tuples: self.tuples.clone(),
        }
    }
}

fn initial_colors(bag: &KBag) -> Vec<usize> {
    let keys: Vec<(u128, Option<usize>, Option<usize>)> =
        bag.elements.iter().map(|e| (e.labels, e.in_mark, e.out_mark)).collect();
    rank(&keys)
}

fn rank<T: Ord>(keys: &[T]) -> Vec<usize> {
    let mut names: BTreeMap<&T, usize> = BTreeMap::new();
    for k in keys {
        names.entry(k).or_insert(0);
    }
    for (i, v) in names.values_mut().enumerate() {
        *v = i;
    }
    keys.iter().map(|k| names[k]).collect()
}

fn distinct(colors: &[usize]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn permute_cells(
    order: &mut Vec<usize>,
    cells: &[(usize, usize)],
    cell: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    let Some(&(start, end)) = cells.get(cell) else {
        visit(order);
        return;
    };
    heap_permute(order, start, end - start, &mut |order| {
        let mut o = order.to_vec();
        permute_cells(&mut o, cells, cell + 1, visit);
    });
}

fn heap_permute(
    order: &mut Vec<usize>,
    start: usize,
    size: usize,
    visit: &mut dyn FnMut(&mut Vec<usize>),
) {
    if size <= 1 {
        visit(order);
        return;
    }
    for i in 0..size {
        heap_permute(order, start, size - 1, visit);
        let j = if size.is_multiple_of(2) { start + i } else { start };
        order.swap(j, start + size - 1);
    }
}
