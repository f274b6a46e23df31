//! Shared oracles and generators for the integration suites. They use only
//! the public structure accessors, not the crate's search code.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use spandec::structure::{P0, P1};
use spandec::{Structure, StructureBuilder};

/// Atomic type of a tuple: labels of each entry, equalities, and every
/// binary relation between entries (in both directions).
fn atomic_type(s: &Structure, tuple: &[usize]) -> Vec<u128> {
    let mut t: Vec<u128> = tuple.iter().map(|&x| s.labels(x)).collect();
    let binary: Vec<usize> = (0..s.vocab().len()).filter(|&r| s.vocab().arity(r) == 2).collect();
    for &a in tuple {
        for &b in tuple {
            t.push(u128::from(a == b));
            for &r in &binary {
                t.push(u128::from(s.holds(r, &[a, b])));
            }
        }
    }
    t
}

/// Interns rank-`r` types shared across structures, so equal ids mean equal
/// types.
#[derive(Default)]
pub struct TypeOracle {
    ids: HashMap<(Vec<u128>, BTreeSet<usize>), usize>,
}

impl TypeOracle {
    fn type_of(&mut self, s: &Structure, tuple: &mut Vec<usize>, rank: usize) -> usize {
        let atomic = atomic_type(s, tuple);
        let mut ext = BTreeSet::new();
        if rank > 0 {
            for b in 0..s.len() {
                tuple.push(b);
                ext.insert(self.type_of(s, tuple, rank - 1));
                tuple.pop();
            }
        }
        let next = self.ids.len();
        *self.ids.entry((atomic, ext)).or_insert(next)
    }

    /// Whether `a` and `b` satisfy the same sentences of quantifier rank
    /// at most `rank`.
    pub fn equivalent(&mut self, a: &Structure, b: &Structure, rank: usize) -> bool {
        self.type_of(a, &mut Vec::new(), rank) == self.type_of(b, &mut Vec::new(), rank)
    }
}

/// Isomorphism by trying every bijection.
pub fn brute_force_isomorphic(a: &Structure, b: &Structure) -> bool {
    if a.len() != b.len() || a.vocab() != b.vocab() {
        return false;
    }
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        if preserves(a, b, &perm) {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn preserves(a: &Structure, b: &Structure, f: &[usize]) -> bool {
    let vocab = a.vocab();
    (0..a.len()).all(|x| a.labels(x) == b.labels(f[x]))
        && (0..vocab.len()).filter(|&r| vocab.arity(r) >= 2).all(|r| {
            a.tuples(r).len() == b.tuples(r).len()
                && a.tuples(r).iter().all(|t| b.holds(r, &t.iter().map(|&x| f[x]).collect::<Vec<_>>()))
        })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Random coloured graph: each node is P0, P1 or uncoloured, each pair an
/// edge with probability `density`.
pub fn random_colored_graph(rng: &mut impl Rng, n: usize, density: f64) -> Structure {
    let mut b = StructureBuilder::colored_graph();
    b.add_elements(n);
    for x in 0..n {
        match rng.gen_range(0..3) {
            0 => b.set_label(x, P0).unwrap(),
            1 => b.set_label(x, P1).unwrap(),
            _ => {}
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            if rng.gen_bool(density) {
                b.add_edge(x, y).unwrap();
            }
        }
    }
    b.build().unwrap()
}

/// Relabels the elements of `s` along `perm` (element `x` becomes `perm[x]`).
pub fn permuted(s: &Structure, perm: &[usize]) -> Structure {
    let mut b = StructureBuilder::new(s.vocab().clone());
    b.add_elements(s.len());
    for x in 0..s.len() {
        b.set_labels_raw(perm[x], s.labels(x));
    }
    for r in 0..s.vocab().len() {
        if s.vocab().arity(r) >= 2 {
            for t in s.tuples(r) {
                let t: Vec<usize> = t.iter().map(|&x| perm[x]).collect();
                b.add_tuple_idx(r, &t).unwrap();
            }
        }
    }
    b.build().unwrap()
}
