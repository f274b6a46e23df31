//! Witness tree-decompositions for the treewidth structures.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::decomp::{encode_classical, ClassicalDecomposition, TreeDecomposition};
use crate::structure::{Role, Structure};
use crate::unionfind::UnionFind;
use crate::{Error, Result};

/// Which witness to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwVariant {
    /// Width 2 from a degree-≤2 elimination order; span is not controlled.
    SeriesParallel,
    /// Frontier sweep through each `Loz` of the chain; width ≤ 2^p + 1, small span.
    Sweep,
}

pub fn canonical_td_tw(s: &Structure, variant: TwVariant) -> Result<TreeDecomposition> {
    let d = match variant {
        TwVariant::SeriesParallel => series_parallel_decomposition(s)?,
        TwVariant::Sweep => sweep_decomposition(s)?,
    };
    encode_classical(s, &d, d.width())
}

/// Eliminates a minimum-degree vertex (degree ≤ 2) at each step, adding the
/// fill edge between its two neighbours. Vertices of degree ≤ 2 always exist
/// in graphs of treewidth ≤ 2, and elimination preserves that class.
pub fn series_parallel_decomposition(s: &Structure) -> Result<ClassicalDecomposition> {
    let n = s.len();
    if n == 0 {
        return Err(Error::NotSeriesParallel("empty structure".into()));
    }
    if !s.vocab().has_only_small_arities() {
        return Err(Error::NotSeriesParallel("relations of arity above 2".into()));
    }
    let mut adj: Vec<BTreeSet<usize>> = s.elements().map(|x| s.neighbors(x).iter().copied().collect()).collect();
    let mut by_degree: BTreeSet<(usize, usize)> = (0..n).map(|x| (adj[x].len(), x)).collect();
    let mut position = vec![usize::MAX; n];
    let mut bags: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut later: Vec<Vec<usize>> = Vec::with_capacity(n);
    while let Some(&(deg, v)) = by_degree.iter().next() {
        if deg > 2 {
            return Err(Error::NotSeriesParallel(format!("every remaining vertex has degree > 2 ({v})")));
        }
        by_degree.remove(&(deg, v));
        position[v] = bags.len();
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        let mut bag = nbrs.clone();
        bag.push(v);
        bags.push(bag);
        later.push(nbrs.clone());
        for &u in &nbrs {
            by_degree.remove(&(adj[u].len(), u));
            adj[u].remove(&v);
        }
        if let [a, b] = nbrs[..] {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        for &u in &nbrs {
            by_degree.insert((adj[u].len(), u));
        }
    }
    // Parent of v's bag: the bag of the earliest eliminated later neighbour.
    let mut parent: Vec<Option<usize>> = later
        .iter()
        .map(|nbrs| nbrs.iter().map(|&u| position[u]).min())
        .collect();
    let roots: Vec<usize> = (0..parent.len()).filter(|&t| parent[t].is_none()).collect();
    let main = *roots.last().expect("at least one bag");
    for &r in &roots {
        if r != main {
            parent[r] = Some(main);
        }
    }
    Ok(ClassicalDecomposition::new(parent, bags))
}

/// Sources, label-path nodes and interiors of each `Loz`, recovered from annotations.
struct Layout {
    sources: Vec<usize>,
    /// Label path of each source, ordered away from it.
    labels: BTreeMap<usize, Vec<usize>>,
    /// Interior node sets keyed by their (smaller, larger) source pair.
    loz: BTreeMap<(usize, usize), Vec<usize>>,
}

fn layout(s: &Structure) -> Result<Layout> {
    let is_source = |x: usize| {
        matches!(s.annotation(x).role, Role::SourceWord { .. } | Role::SourceS | Role::SourceT)
    };
    let is_label = |x: usize| matches!(s.annotation(x).role, Role::LabelPath { .. });
    let sources: Vec<usize> = s.elements().filter(|&x| is_source(x)).collect();
    if sources.is_empty() {
        return Err(Error::MissingAnnotations("no source annotations".into()));
    }
    let mut labels = BTreeMap::new();
    for &x in &sources {
        let mut path = Vec::new();
        let mut prev = x;
        let mut cur = s.neighbors(x).iter().copied().find(|&y| is_label(y));
        while let Some(y) = cur {
            path.push(y);
            cur = s.neighbors(y).iter().copied().find(|&z| z != prev && is_label(z));
            prev = y;
        }
        labels.insert(x, path);
    }
    let mut uf = UnionFind::new(s.len());
    for x in s.elements().filter(|&x| !is_source(x) && !is_label(x)) {
        for &y in s.neighbors(x) {
            if !is_source(y) && !is_label(y) {
                uf.union(x, y);
            }
        }
    }
    let mut parts: BTreeMap<usize, (Vec<usize>, BTreeSet<usize>)> = BTreeMap::new();
    for x in s.elements().filter(|&x| !is_source(x) && !is_label(x)) {
        let entry = parts.entry(uf.find(x)).or_default();
        entry.0.push(x);
        entry.1.extend(s.neighbors(x).iter().copied().filter(|&y| is_source(y)));
    }
    let mut loz: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (nodes, ends) in parts.into_values() {
        let ends: Vec<usize> = ends.into_iter().collect();
        let [a, b] = ends[..] else {
            return Err(Error::MissingAnnotations(format!(
                "interior component touches {} sources, expected 2",
                ends.len()
            )));
        };
        loz.entry((a, b)).or_default().extend(nodes);
    }
    Ok(Layout { sources, labels, loz })
}

/// Source chains of the `Loz` graph, each walked from its smaller endpoint.
fn chains(layout: &Layout) -> Result<Vec<Vec<usize>>> {
    let mut adj: BTreeMap<usize, Vec<usize>> = layout.sources.iter().map(|&x| (x, Vec::new())).collect();
    for &(a, b) in layout.loz.keys() {
        adj.get_mut(&a).expect("source").push(b);
        adj.get_mut(&b).expect("source").push(a);
    }
    if let Some((x, _)) = adj.iter().find(|(_, v)| v.len() > 2) {
        return Err(Error::MissingAnnotations(format!("source {x} lies on more than two Loz copies")));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in &layout.sources {
        if seen.contains(&start) || adj[&start].len() > 1 {
            continue;
        }
        let mut chain = vec![start];
        seen.insert(start);
        let mut cur = start;
        while let Some(&next) = adj[&cur].iter().find(|y| !seen.contains(*y)) {
            seen.insert(next);
            chain.push(next);
            cur = next;
        }
        out.push(chain);
    }
    if seen.len() != layout.sources.len() {
        return Err(Error::MissingAnnotations("Loz copies form a cycle".into()));
    }
    Ok(out)
}

/// Introduces the nodes of one `Loz` in breadth-first order from `entry`, two
/// per bag. A node leaves the frontier once all its neighbours inside the
/// `Loz` have been introduced.
fn sweep_loz(s: &Structure, interior: &[usize], entry: usize, exit: usize, bags: &mut Vec<Vec<usize>>) {
    let inside: BTreeSet<usize> = interior.iter().copied().chain([entry, exit]).collect();
    let mut order = Vec::with_capacity(inside.len());
    let mut seen = BTreeSet::from([entry]);
    let mut queue = VecDeque::from([entry]);
    while let Some(u) = queue.pop_front() {
        if u != entry {
            order.push(u);
        }
        for &v in s.neighbors(u) {
            if inside.contains(&v) && seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    debug_assert_eq!(order.last(), Some(&exit));
    let mut introduced = BTreeSet::from([entry]);
    let mut frontier: BTreeSet<usize> = BTreeSet::from([entry]);
    for batch in order.chunks(2) {
        let mut bag: Vec<usize> = frontier.iter().copied().collect();
        bag.extend_from_slice(batch);
        bags.push(bag);
        introduced.extend(batch.iter().copied());
        frontier.extend(batch.iter().copied());
        frontier.retain(|&x| {
            x == exit || s.neighbors(x).iter().any(|y| inside.contains(y) && !introduced.contains(y))
        });
    }
}

/// Path-like sweep along each chain of `Loz` copies, with every label path
/// attached as a side branch next to the first bag holding its source.
pub fn sweep_decomposition(s: &Structure) -> Result<ClassicalDecomposition> {
    let layout = layout(s)?;
    let mut bags: Vec<Vec<usize>> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut first_bag: BTreeMap<usize, usize> = BTreeMap::new();
    for chain in chains(&layout)? {
        let start = bags.len();
        bags.push(vec![chain[0]]);
        parent.push(if start == 0 { None } else { Some(0) });
        first_bag.insert(chain[0], start);
        for w in chain.windows(2) {
            let (a, b) = (w[0], w[1]);
            let interior = &layout.loz[&(a.min(b), a.max(b))];
            let before = bags.len();
            sweep_loz(s, interior, a, b, &mut bags);
            for t in before..bags.len() {
                parent.push(Some(t - 1));
                if bags[t].contains(&b) {
                    first_bag.entry(b).or_insert(t);
                }
            }
        }
    }
    for (&x, path) in &layout.labels {
        let mut prev = first_bag[&x];
        let mut last = x;
        for &y in path {
            bags.push(vec![last, y]);
            parent.push(Some(prev));
            prev = bags.len() - 1;
            last = y;
        }
    }
    Ok(ClassicalDecomposition::new(parent, bags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{ext, span, validate_td, width};
    use crate::gadgets::plan::plan_tw;
    use crate::gadgets::tw::{build_tw_g, build_tw_h, make_loz, TwParams};
    use crate::structure::{cycle_graph, is_isomorphic, StructureBuilder};

    #[test]
    fn sp_variant_on_small_graphs() {
        let c = cycle_graph(5);
        let d = series_parallel_decomposition(&c).unwrap();
        assert_eq!(d.width(), 2);
        d.validate(&c).unwrap();
        let mut b = StructureBuilder::colored_graph();
        b.add_elements(4);
        for (x, y) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            b.add_edge(x, y).unwrap();
        }
        assert!(matches!(series_parallel_decomposition(&b.build().unwrap()), Err(Error::NotSeriesParallel(_))));
    }

    #[test]
    fn both_variants_on_a_single_loz() {
        let z = make_loz(2, 2).unwrap();
        for variant in [TwVariant::SeriesParallel, TwVariant::Sweep] {
            let td = canonical_td_tw(&z, variant).unwrap();
            assert_eq!(validate_td(&td), Ok(()));
            assert!(is_isomorphic(&ext(&td).unwrap().0, &z));
        }
        let sweep = canonical_td_tw(&z, TwVariant::Sweep).unwrap();
        assert!(width(&sweep) <= 5);
        assert!(span(&sweep).unwrap() <= 3);
    }

    #[test]
    fn micro_tw_witnesses() {
        let params = TwParams::with_n(&plan_tw(1, 1, 1).unwrap(), 4).unwrap();
        for s in [build_tw_g(&params).unwrap(), build_tw_h(&params).unwrap()] {
            let sp = canonical_td_tw(&s, TwVariant::SeriesParallel).unwrap();
            assert_eq!(width(&sp), 2);
            assert!(is_isomorphic(&ext(&sp).unwrap().0, &s));
            let sweep = canonical_td_tw(&s, TwVariant::Sweep).unwrap();
            assert!(width(&sweep) <= (1 << params.p) + 1);
            assert!(span(&sweep).unwrap() <= 3);
            assert!(is_isomorphic(&ext(&sweep).unwrap().0, &s));
        }
    }

    #[test]
    fn sweep_needs_annotations() {
        let z = make_loz(1, 1).unwrap().without_annotations();
        assert!(matches!(canonical_td_tw(&z, TwVariant::Sweep), Err(Error::MissingAnnotations(_))));
    }
}
