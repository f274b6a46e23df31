//! Classical decompositions (a tree with a bag subset per node) and their
//! encoding as trees of k-bags.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{BagElement, KBag, TreeDecomposition};
use crate::structure::Structure;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalDecomposition {
    pub parent: Vec<Option<usize>>,
    /// Sorted element ids of the decomposed structure.
    pub bags: Vec<Vec<usize>>,
}

impl ClassicalDecomposition {
    pub fn new(parent: Vec<Option<usize>>, bags: Vec<Vec<usize>>) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        Self { parent, bags }
    }

    /// A single-branch decomposition `bags[0] - bags[1] - ...` rooted at the first bag.
    pub fn path(bags: Vec<Vec<usize>>) -> Self {
        let parent = (0..bags.len()).map(|i| i.checked_sub(1)).collect();
        Self::new(parent, bags)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1)
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.len()];
        for (t, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                ch[p].push(t);
            }
        }
        ch
    }

    fn preorder(&self) -> Result<Vec<usize>> {
        let fail = |m: &str| Error::Classical(m.to_string());
        if self.parent.len() != self.bags.len() {
            return Err(fail("parent and bag counts differ"));
        }
        if self.parent.iter().any(|p| p.is_some_and(|p| p >= self.len())) {
            return Err(fail("parent out of range"));
        }
        let roots: Vec<usize> = (0..self.len()).filter(|&t| self.parent[t].is_none()).collect();
        if roots.len() != 1 {
            return Err(fail(&format!("expected one root, found {}", roots.len())));
        }
        let children = self.children();
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![roots[0]];
        while let Some(t) = stack.pop() {
            order.push(t);
            stack.extend(children[t].iter().rev());
        }
        if order.len() != self.len() {
            return Err(fail("parent map contains a cycle"));
        }
        Ok(order)
    }

    /// Checks tree shape, element and tuple coverage, and connected occurrences.
    pub fn validate(&self, s: &Structure) -> Result<()> {
        self.preorder()?;
        if let Some(t) = self.bags.iter().position(Vec::is_empty) {
            return Err(Error::Classical(format!("bag {t} is empty")));
        }
        if let Some(&x) = self.bags.iter().flatten().find(|&&x| x >= s.len()) {
            return Err(Error::UnknownElement(x));
        }
        let mut in_bag = vec![Vec::new(); s.len()];
        for (t, b) in self.bags.iter().enumerate() {
            for &x in b {
                in_bag[x].push(t);
            }
        }
        if let Some(x) = in_bag.iter().position(Vec::is_empty) {
            return Err(Error::Classical(format!("element {x} appears in no bag")));
        }
        for (_, tuple) in s.all_tuples() {
            let covered = self.bags.iter().any(|b| tuple.iter().all(|x| b.binary_search(x).is_ok()));
            if !covered {
                return Err(Error::Classical(format!("tuple {tuple:?} is not covered by any bag")));
            }
        }
        // Occurrences are connected iff exactly one occurrence lacks its parent in the set.
        for (x, nodes) in in_bag.iter().enumerate() {
            let set: BTreeSet<usize> = nodes.iter().copied().collect();
            let tops = nodes
                .iter()
                .filter(|&&t| self.parent[t].is_none_or(|p| !set.contains(&p)))
                .count();
            if tops != 1 {
                return Err(Error::Classical(format!("occurrences of element {x} are disconnected")));
            }
        }
        Ok(())
    }
}

/// Encodes a classical decomposition as a tree of k-bags.
///
/// Local ids follow ascending element ids. Each node gives out-indices
/// `0, 1, ...` to its elements shared with some child, in ascending element
/// order; a child in-marks a shared element with the parent's out-index.
pub fn encode_classical(s: &Structure, d: &ClassicalDecomposition, k: usize) -> Result<TreeDecomposition> {
    d.validate(s)?;
    if let Some(b) = d.bags.iter().find(|b| b.len() > k + 1) {
        return Err(Error::Width { size: b.len(), k });
    }
    let children = d.children();
    let mut bags: Vec<KBag> = Vec::with_capacity(d.len());
    for (t, elems) in d.bags.iter().enumerate() {
        let mut bag = KBag::with_elements(elems.len());
        let mut next_out = 0;
        for (local, &x) in elems.iter().enumerate() {
            bag.elements[local] = BagElement {
                labels: s.labels(x),
                in_mark: None,
                out_mark: None,
                annotation: s.annotation(x).clone(),
            };
            if children[t].iter().any(|&u| d.bags[u].binary_search(&x).is_ok()) {
                bag.elements[local].out_mark = Some(next_out);
                next_out += 1;
            }
        }
        for (rel, tuple) in s.all_tuples() {
            if tuple.len() < 2 {
                continue;
            }
            let local: Option<Vec<usize>> =
                tuple.iter().map(|x| elems.binary_search(x).ok()).collect();
            if let Some(local) = local {
                bag.add_tuple(rel, local);
            }
        }
        bags.push(bag);
    }
    for (u, p) in d.parent.iter().enumerate() {
        let Some(p) = *p else { continue };
        for (local, x) in d.bags[u].iter().enumerate() {
            if let Ok(pl) = d.bags[p].binary_search(x) {
                bags[u].elements[local].in_mark = bags[p].elements[pl].out_mark;
            }
        }
    }
    Ok(TreeDecomposition::new(s.vocab().clone(), k, d.parent.clone(), bags))
}
