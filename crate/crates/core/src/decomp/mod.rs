//! Decompositions as trees of k-bags.
//!
//! A [`TreeDecomposition`] is a rooted tree whose nodes carry [`KBag`]s. The
//! decomposed structure is recovered by [`ext`]: the parent's out-mark `i` is
//! identified with every child's in-mark `i`, and the equivalence generated
//! by these identifications names the global elements.

mod bag;
mod classical;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::structure::{Annotation, Structure, StructureBuilder, Vocabulary};
use crate::unionfind::UnionFind;
use crate::{Error, Result};

pub use bag::{BagClass, BagElement, KBag};
pub use classical::{encode_classical, ClassicalDecomposition};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub vocab: Vocabulary,
    pub k: usize,
    pub parent: Vec<Option<usize>>,
    pub bags: Vec<KBag>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// The parent map is not a single rooted tree.
    TreeShape,
    /// Every node carries a bag. Holds by construction.
    OneBagPerNode,
    /// Out-mark `i` present iff some child has in-mark `i`.
    Interface,
    /// The root has an in-mark.
    RootInMark,
    /// The bag itself is malformed (size, marks, tuples or colours).
    Bag,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub node: usize,
    pub condition: Condition,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn new(node: usize, condition: Condition, index: Option<usize>, detail: impl Into<String>) -> Self {
        Self { node, condition, index, detail: detail.into() }
    }
}

impl TreeDecomposition {
    pub fn new(vocab: Vocabulary, k: usize, parent: Vec<Option<usize>>, mut bags: Vec<KBag>) -> Self {
        for b in &mut bags {
            b.normalize(&vocab);
        }
        Self { vocab, k, parent, bags }
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        let mut roots = self.parent.iter().enumerate().filter(|(_, p)| p.is_none());
        let r = roots.next()?.0;
        roots.next().is_none().then_some(r)
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.len()];
        for (t, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p < ch.len() {
                    ch[p].push(t);
                }
            }
        }
        ch
    }

    /// Nodes in an order where parents precede their children.
    pub fn preorder(&self) -> Result<Vec<usize>> {
        let root = self.root().ok_or_else(|| self.shape_error("no unique root"))?;
        let children = self.children();
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![root];
        while let Some(t) = stack.pop() {
            order.push(t);
            stack.extend(children[t].iter().rev());
        }
        if order.len() != self.len() {
            return Err(self.shape_error("nodes unreachable from the root"));
        }
        Ok(order)
    }

    fn shape_error(&self, msg: &str) -> Error {
        Error::InvalidDecomposition(vec![Violation::new(0, Condition::TreeShape, None, msg)])
    }

    fn check_node(&self, t: usize) -> Result<()> {
        if t < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(t))
        }
    }

    /// Per-node depth, assuming a valid tree shape.
    fn depths(&self) -> Result<Vec<usize>> {
        let mut depth = vec![0; self.len()];
        for t in self.preorder()? {
            if let Some(p) = self.parent[t] {
                depth[t] = depth[p] + 1;
            }
        }
        Ok(depth)
    }
}

pub fn validate_td(td: &TreeDecomposition) -> std::result::Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let n = td.len();
    if td.parent.len() != n {
        v.push(Violation::new(0, Condition::TreeShape, None, "parent and bag counts differ"));
        return Err(v);
    }
    if n == 0 {
        v.push(Violation::new(0, Condition::TreeShape, None, "empty tree"));
        return Err(v);
    }
    let roots: Vec<usize> = (0..n).filter(|&t| td.parent[t].is_none()).collect();
    if roots.len() != 1 {
        v.push(Violation::new(
            roots.first().copied().unwrap_or(0),
            Condition::TreeShape,
            None,
            format!("{} roots", roots.len()),
        ));
    }
    for (t, p) in td.parent.iter().enumerate() {
        match *p {
            Some(p) if p >= n => {
                v.push(Violation::new(t, Condition::TreeShape, None, "parent out of range"))
            }
            Some(p) if p == t => v.push(Violation::new(t, Condition::TreeShape, None, "self loop")),
            _ => {}
        }
    }
    if v.is_empty() && td.preorder().is_err() {
        v.push(Violation::new(0, Condition::TreeShape, None, "cycle in parent map"));
    }
    for (t, bag) in td.bags.iter().enumerate() {
        validate_bag(td, t, bag, &mut v);
    }
    if v.iter().any(|x| x.condition == Condition::TreeShape) {
        return Err(v);
    }
    let children = td.children();
    for t in 0..n {
        let wanted: BTreeSet<usize> =
            children[t].iter().flat_map(|&u| td.bags[u].in_indices()).collect();
        let have: BTreeSet<usize> = td.bags[t].out_indices().collect();
        for &i in have.difference(&wanted) {
            v.push(Violation::new(t, Condition::Interface, Some(i), "out-mark without a matching child"));
        }
        for &i in wanted.difference(&have) {
            v.push(Violation::new(t, Condition::Interface, Some(i), "child in-mark without out-mark"));
        }
    }
    let root = roots[0];
    for i in td.bags[root].in_indices() {
        v.push(Violation::new(root, Condition::RootInMark, Some(i), "root has an in-mark"));
    }
    if v.is_empty() {
        Ok(())
    } else {
        v.sort();
        Err(v)
    }
}

fn validate_bag(td: &TreeDecomposition, t: usize, bag: &KBag, v: &mut Vec<Violation>) {
    let bad = |v: &mut Vec<Violation>, index, msg: String| {
        v.push(Violation::new(t, Condition::Bag, index, msg))
    };
    if bag.is_empty() {
        bad(v, None, "empty bag".into());
    }
    if bag.len() > td.k + 1 {
        bad(v, None, format!("{} elements exceed k + 1 = {}", bag.len(), td.k + 1));
    }
    let mut ins = BTreeSet::new();
    let mut outs = BTreeSet::new();
    for e in &bag.elements {
        for (mark, seen) in [(e.in_mark, &mut ins), (e.out_mark, &mut outs)] {
            if let Some(i) = mark {
                if i > td.k {
                    bad(v, Some(i), format!("mark index {i} exceeds k = {}", td.k));
                }
                if !seen.insert(i) {
                    bad(v, Some(i), format!("index {i} marks two elements"));
                }
            }
        }
        let unary: u128 = (0..td.vocab.len())
            .filter(|&r| td.vocab.arity(r) == 1)
            .fold(0, |m, r| m | 1u128 << r);
        if e.labels & !unary != 0 {
            bad(v, None, "label bit outside the unary relations".into());
        }
        if let (Some(p0), Some(p1)) = (td.vocab.index_of("P0"), td.vocab.index_of("P1")) {
            if e.labels >> p0 & 1 == 1 && e.labels >> p1 & 1 == 1 {
                bad(v, None, "element carries both P0 and P1".into());
            }
        }
    }
    for (rel, tuple) in &bag.tuples {
        if *rel >= td.vocab.len() || td.vocab.arity(*rel) != tuple.len() || tuple.len() < 2 {
            bad(v, None, format!("tuple {tuple:?} does not fit relation {rel}"));
        } else if tuple.iter().any(|&x| x >= bag.len()) {
            bad(v, None, format!("tuple {tuple:?} references a missing element"));
        }
    }
}

fn require_valid(td: &TreeDecomposition) -> Result<()> {
    validate_td(td).map_err(Error::InvalidDecomposition)
}

/// The equivalence generated by the interface links: `(node, local)` to class id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientMap {
    offsets: Vec<usize>,
    class_of: Vec<usize>,
    occurrences: Vec<Vec<(usize, usize)>>,
}

impl QuotientMap {
    pub fn class(&self, node: usize, local: usize) -> Result<usize> {
        let start = *self.offsets.get(node).ok_or(Error::UnknownNode(node))?;
        let end = self.offsets[node + 1];
        if start + local >= end {
            return Err(Error::UnknownElement(local));
        }
        Ok(self.class_of[start + local])
    }

    pub fn num_classes(&self) -> usize {
        self.occurrences.len()
    }

    /// `(node, local)` pairs of a class, in node order.
    pub fn occurrences(&self, class: usize) -> Result<&[(usize, usize)]> {
        self.occurrences.get(class).map(Vec::as_slice).ok_or(Error::UnknownClass(class))
    }

    /// Classes of a node's bag, indexed by local id.
    pub fn bag_classes(&self, node: usize) -> &[usize] {
        &self.class_of[self.offsets[node]..self.offsets[node + 1]]
    }
}

fn quotient(td: &TreeDecomposition) -> QuotientMap {
    let mut offsets = Vec::with_capacity(td.len() + 1);
    let mut total = 0;
    for b in &td.bags {
        offsets.push(total);
        total += b.len();
    }
    offsets.push(total);
    let mut uf = UnionFind::new(total);
    for (u, p) in td.parent.iter().enumerate() {
        let Some(p) = *p else { continue };
        for (x, e) in td.bags[u].elements.iter().enumerate() {
            if let Some(i) = e.in_mark {
                if let Some(y) = td.bags[p].out_marked(i) {
                    uf.union(offsets[p] + y, offsets[u] + x);
                }
            }
        }
    }
    let (class_of, count) = uf.classes();
    let mut occurrences = vec![Vec::new(); count];
    for t in 0..td.len() {
        for x in 0..td.bags[t].len() {
            occurrences[class_of[offsets[t] + x]].push((t, x));
        }
    }
    QuotientMap { offsets, class_of, occurrences }
}

/// Reconstructs the decomposed structure. Class `c` becomes element `c`.
pub fn ext(td: &TreeDecomposition) -> Result<(Structure, QuotientMap)> {
    require_valid(td)?;
    let q = quotient(td);
    let mut b = StructureBuilder::new(td.vocab.clone());
    let mut labels = vec![0u128; q.num_classes()];
    for c in 0..q.num_classes() {
        let annotation = q.occurrences[c]
            .iter()
            .map(|&(t, x)| &td.bags[t].elements[x].annotation)
            .find(|a| !a.is_plain())
            .cloned()
            .unwrap_or_else(Annotation::plain);
        b.add_element(annotation);
        for &(t, x) in &q.occurrences[c] {
            labels[c] |= td.bags[t].elements[x].labels;
        }
    }
    if let (Some(p0), Some(p1)) = (td.vocab.index_of("P0"), td.vocab.index_of("P1")) {
        let both = 1u128 << p0 | 1u128 << p1;
        if let Some(class) = labels.iter().position(|&l| l & both == both) {
            return Err(Error::MergeConflict { class });
        }
    }
    for (c, &l) in labels.iter().enumerate() {
        b.set_labels_raw(c, l);
    }
    for (t, bag) in td.bags.iter().enumerate() {
        let classes = q.bag_classes(t);
        for (rel, tuple) in &bag.tuples {
            let mapped: Vec<usize> = tuple.iter().map(|&x| classes[x]).collect();
            b.add_tuple_idx(*rel, &mapped)?;
        }
    }
    Ok((b.build()?, q))
}

/// Undirected tree distances, computed through lowest common ancestors.
pub struct TreeMetric {
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
}

impl TreeMetric {
    pub fn new(td: &TreeDecomposition) -> Result<Self> {
        Ok(Self { parent: td.parent.clone(), depth: td.depths()? })
    }

    pub fn distance(&self, mut a: usize, mut b: usize) -> usize {
        let mut d = 0;
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("deeper node has a parent");
            d += 1;
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("deeper node has a parent");
            d += 1;
        }
        while a != b {
            a = self.parent[a].expect("non-root");
            b = self.parent[b].expect("non-root");
            d += 2;
        }
        d
    }

    /// Diameter of a node set under the tree metric (double sweep).
    pub fn diameter(&self, nodes: &[usize]) -> usize {
        let Some(&first) = nodes.first() else { return 0 };
        let far = |from: usize| {
            nodes
                .iter()
                .map(|&u| (self.distance(from, u), u))
                .max()
                .expect("non-empty")
        };
        let (_, u) = far(first);
        far(u).0
    }
}

pub fn tree_distance(td: &TreeDecomposition, t: usize, u: usize) -> Result<usize> {
    td.check_node(t)?;
    td.check_node(u)?;
    Ok(TreeMetric::new(td)?.distance(t, u))
}

/// Occurrence nodes of a class and their diameter in the tree.
pub fn element_occurrences(td: &TreeDecomposition, class: usize) -> Result<(Vec<usize>, usize)> {
    require_valid(td)?;
    let q = quotient(td);
    let mut nodes: Vec<usize> = q.occurrences(class)?.iter().map(|&(t, _)| t).collect();
    nodes.dedup();
    let metric = TreeMetric::new(td)?;
    let d = metric.diameter(&nodes);
    Ok((nodes, d))
}

/// Largest occurrence diameter over all classes.
pub fn span(td: &TreeDecomposition) -> Result<usize> {
    require_valid(td)?;
    Ok(span_unchecked(td))
}

pub(crate) fn span_unchecked(td: &TreeDecomposition) -> usize {
    let q = quotient(td);
    let metric = TreeMetric::new(td).expect("validated tree");
    (0..q.num_classes())
        .map(|c| {
            let mut nodes: Vec<usize> = q.occurrences[c].iter().map(|&(t, _)| t).collect();
            nodes.dedup();
            metric.diameter(&nodes)
        })
        .max()
        .unwrap_or(0)
}

/// Largest bag size minus one.
pub fn width(td: &TreeDecomposition) -> usize {
    td.bags.iter().map(KBag::len).max().unwrap_or(1).saturating_sub(1)
}

pub fn is_path_decomposition(td: &TreeDecomposition) -> bool {
    td.children().iter().all(|c| c.len() <= 1)
}

/// Restricts to a connected node set. Marks that lose their partner are dropped.
pub fn restrict_to(td: &TreeDecomposition, nodes: &[usize]) -> Result<TreeDecomposition> {
    require_valid(td)?;
    let keep: BTreeSet<usize> = nodes.iter().copied().collect();
    if keep.is_empty() {
        return Err(Error::InvalidDecomposition(vec![Violation::new(
            0,
            Condition::TreeShape,
            None,
            "empty restriction",
        )]));
    }
    for &t in &keep {
        td.check_node(t)?;
    }
    let new_id: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let parent: Vec<Option<usize>> = keep
        .iter()
        .map(|&t| td.parent[t].and_then(|p| new_id.get(&p).copied()))
        .collect();
    if parent.iter().filter(|p| p.is_none()).count() != 1 {
        return Err(Error::InvalidDecomposition(vec![Violation::new(
            0,
            Condition::TreeShape,
            None,
            "restriction is not connected",
        )]));
    }
    let children = td.children();
    let bags = keep
        .iter()
        .map(|&t| {
            let mut bag = td.bags[t].clone();
            let kept_children: Vec<usize> =
                children[t].iter().copied().filter(|u| keep.contains(u)).collect();
            let wanted: BTreeSet<usize> =
                kept_children.iter().flat_map(|&u| td.bags[u].in_indices()).collect();
            let is_root = td.parent[t].is_none_or(|p| !keep.contains(&p));
            for e in &mut bag.elements {
                if e.out_mark.is_some_and(|i| !wanted.contains(&i)) {
                    e.out_mark = None;
                }
                if is_root {
                    e.in_mark = None;
                }
            }
            bag
        })
        .collect();
    Ok(TreeDecomposition { vocab: td.vocab.clone(), k: td.k, parent, bags })
}

/// Canonical code of the tree of bag classes (children sorted recursively).
///
/// Equal codes mean the decompositions are isomorphic as labelled rooted
/// trees, hence have isomorphic `ext`.
pub fn tree_code(td: &TreeDecomposition) -> Result<String> {
    let order = td.preorder()?;
    let children = td.children();
    let mut codes: Vec<String> = vec![String::new(); td.len()];
    for &t in order.iter().rev() {
        let class = td.bags[t].class(&td.vocab);
        let mut sub: Vec<&String> = children[t].iter().map(|&u| &codes[u]).collect();
        sub.sort();
        let mut code = serde_json::to_string(&class)?;
        code.push('[');
        for s in sub {
            code.push_str(s);
            code.push(',');
        }
        code.push(']');
        codes[t] = code;
    }
    Ok(codes[order[0]].clone())
}

/// Breadth-first order from the root; used for stable output.
pub fn bfs_order(td: &TreeDecomposition) -> Result<Vec<usize>> {
    let root = td.root().ok_or_else(|| td.shape_error("no unique root"))?;
    let children = td.children();
    let mut out = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(t) = queue.pop_front() {
        out.push(t);
        queue.extend(children[t].iter().copied());
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
