//! Treewidth gadgets: `Loz(p, l)` and the word-labelled structures `G`, `H`.
//!
//! Both structures have one source `s_w` per bit string `w` of length at most
//! `n`, with ids in shortlex order. `G` links `s_w` to `s_{w0}` by a `Loz`,
//! `H` links `s_w` to `s_{w1}`. `G` additionally links leaves ending in 1
//! across distinct h-trees. Finally both are completed into one chain.

use std::collections::BTreeMap;

use super::plan::{tw_h, TwPlan};
use crate::structure::{Annotation, Role, Structure, StructureBuilder, Word, P0, P1};
use crate::unionfind::UnionFind;
use crate::{Error, Result};

/// Default cap on generated node counts.
pub const NODE_CAP: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwParams {
    pub k: usize,
    pub p: u32,
    pub l: usize,
    pub n: u32,
    pub h: u32,
}

impl TwParams {
    pub fn from_plan(plan: &TwPlan) -> Result<Self> {
        Self::with_n(plan, plan.n)
    }

    /// The plan's `p`, `l` and `k` with an explicit `n`; `h` is recomputed.
    pub fn with_n(plan: &TwPlan, n: u64) -> Result<Self> {
        let h = tw_h(plan.k, n).ok_or_else(|| Error::Parameter(format!("no h >= 0 for n = {n}")))?;
        let small = |v: u64, what: &str| {
            u32::try_from(v).map_err(|_| Error::Parameter(format!("{what} = {v} is too large")))
        };
        Ok(Self {
            k: usize::try_from(plan.k).map_err(|_| Error::Parameter("k too large".into()))?,
            p: small(plan.p, "p")?,
            l: usize::try_from(plan.l).map_err(|_| Error::Parameter("l too large".into()))?,
            n: small(n, "n")?,
            h: small(h, "h")?,
        })
    }

    /// Nodes of one `Loz` excluding its two sources.
    fn loz_interior(&self) -> usize {
        loz_size(self.p, self.l) - 2
    }
}

/// `2(2^{p+1} - 1) + 2^p (l - 1)`.
pub fn loz_size(p: u32, l: usize) -> usize {
    2 * ((1usize << (p + 1)) - 1) + (1usize << p) * (l - 1)
}

/// Adds a `Loz(p, l)` whose sources are the existing elements `a` and `b`.
fn add_loz(b: &mut StructureBuilder, a: usize, bb: usize, p: u32, l: usize) -> Result<()> {
    let leaves_a = add_heap_tree(b, a, p)?;
    let leaves_b = add_heap_tree(b, bb, p)?;
    for (i, (&x, &y)) in leaves_a.iter().zip(&leaves_b).enumerate() {
        b.set_annotation(x, Annotation::role(Role::LozLeaf { pair: i }));
        b.set_annotation(y, Annotation::role(Role::LozLeaf { pair: i }));
        b.add_path(x, y, l)?;
    }
    Ok(())
}

/// Complete binary tree of height `p` below `root`, heap order; returns leaves.
fn add_heap_tree(b: &mut StructureBuilder, root: usize, p: u32) -> Result<Vec<usize>> {
    let mut level = vec![root];
    for _ in 0..p {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &x in &level {
            for _ in 0..2 {
                let c = b.add_plain();
                b.add_edge(x, c)?;
                next.push(c);
            }
        }
        level = next;
    }
    Ok(level)
}

pub fn make_loz(p: u32, l: usize) -> Result<Structure> {
    if p == 0 || l == 0 {
        return Err(Error::Parameter("p and l must be at least 1".into()));
    }
    let mut b = StructureBuilder::colored_graph();
    let a = b.add_element(Annotation::role(Role::SourceS));
    let bb = b.add_element(Annotation::role(Role::SourceT));
    add_loz(&mut b, a, bb, p, l)?;
    b.build()
}

fn add_word_label(b: &mut StructureBuilder, x: usize, w: &Word) -> Result<()> {
    let mut prev = x;
    for (position, &bit) in w.bits().iter().enumerate() {
        let y = b.add_element(Annotation::role(Role::LabelPath { position }));
        b.set_label(y, if bit { P1 } else { P0 })?;
        b.add_edge(prev, y)?;
        prev = y;
    }
    Ok(())
}

/// Hangs a path of `|w|` fresh nodes off `x`, the i-th coloured by bit i.
pub fn attach_word_label(s: &Structure, x: usize, w: &Word) -> Result<Structure> {
    if x >= s.len() {
        return Err(Error::UnknownElement(x));
    }
    let mut b = StructureBuilder::from_structure(s);
    add_word_label(&mut b, x, w)?;
    b.build()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwSide {
    G,
    H,
}

/// Construction stages, for inspecting intermediate structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TwStage {
    TreeLinks,
    InterLinks,
    Complete,
}

/// Pairs of source ids joined by one `Loz` each, in construction order.
pub fn tw_links(params: &TwParams, side: TwSide, stage: TwStage) -> Result<Vec<(usize, usize)>> {
    let n = params.n as usize;
    let words = Word::all_up_to(n);
    let mut links = Vec::new();
    let extend_bit = side == TwSide::H;
    for w in words.iter().filter(|w| w.len() < n) {
        links.push((w.rank(), w.push(extend_bit).rank()));
    }
    if stage >= TwStage::InterLinks && side == TwSide::G {
        links.extend(inter_links(params)?);
    }
    if stage >= TwStage::Complete {
        let completion = chain_completion(words.len(), &links);
        links.extend(completion);
    }
    Ok(links)
}

/// `2k+3` links for every unordered pair of h-trees, each leaf used once.
fn inter_links(params: &TwParams) -> Result<Vec<(usize, usize)>> {
    let (n, h) = (params.n as usize, params.h as usize);
    let per_pair = 2 * params.k + 3;
    let roots: Vec<Word> = Word::all_up_to(h).into_iter().filter(|w| w.len() == h).collect();
    let mut free: Vec<std::vec::IntoIter<usize>> = roots
        .iter()
        .map(|r| {
            Word::all_up_to(n)
                .into_iter()
                .filter(|w| w.len() == n && w.ends_with(true) && w.bits().starts_with(r.bits()))
                .map(|w| w.rank())
                .collect::<Vec<_>>()
                .into_iter()
        })
        .collect();
    let mut links = Vec::new();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            for _ in 0..per_pair {
                let (Some(x), Some(y)) = (free[i].next(), free[j].next()) else {
                    return Err(Error::Parameter(format!(
                        "not enough leaves ending in 1 for h = {h}, n = {n}, k = {}",
                        params.k
                    )));
                };
                links.push((x, y));
            }
        }
    }
    Ok(links)
}

/// Joins the path-shaped components of the link graph into one chain.
///
/// Components are taken in order of their least source id, each walked from
/// its smaller endpoint; the last source of one is linked to the first of the next.
fn chain_completion(sources: usize, links: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut adj = vec![Vec::new(); sources];
    let mut uf = UnionFind::new(sources);
    for &(x, y) in links {
        adj[x].push(y);
        adj[y].push(x);
        uf.union(x, y);
    }
    let (ids, count) = uf.classes();
    let mut members = vec![Vec::new(); count];
    for (x, c) in ids.into_iter().enumerate() {
        members[c].push(x);
    }
    let mut chains: Vec<Vec<usize>> = members
        .into_iter()
        .map(|m| {
            let start = m.iter().copied().filter(|&x| adj[x].len() <= 1).min().unwrap_or(m[0]);
            walk_path(&adj, start)
        })
        .collect();
    chains.sort_by_key(|c| *c.iter().min().expect("non-empty"));
    chains.windows(2).map(|w| (*w[0].last().unwrap(), w[1][0])).collect()
}

fn walk_path(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut path = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    while let Some(&next) = adj[cur].iter().find(|&&y| y != prev && !path.contains(&y)) {
        prev = cur;
        cur = next;
        path.push(cur);
    }
    path
}

/// Builds `G` or `H` up to the given stage.
pub fn build_tw(params: &TwParams, side: TwSide, stage: TwStage) -> Result<Structure> {
    if params.p == 0 || params.l == 0 || params.n == 0 || params.n > 24 {
        return Err(Error::Parameter("need p, l, n >= 1 and n <= 24".into()));
    }
    let n = params.n as usize;
    let words = Word::all_up_to(n);
    let links = tw_links(params, side, stage)?;
    let label_nodes: usize = words.iter().map(Word::len).sum();
    let projected = words.len() + label_nodes + links.len() * params.loz_interior();
    if projected > NODE_CAP {
        return Err(Error::Parameter(format!("{projected} nodes exceed the cap of {NODE_CAP}")));
    }
    let mut b = StructureBuilder::colored_graph();
    for w in &words {
        let htree = (w.len() >= params.h as usize).then(|| w.prefix(params.h as usize));
        b.add_element(Annotation { role: Role::SourceWord { word: w.clone() }, htree });
    }
    for w in &words {
        add_word_label(&mut b, w.rank(), w)?;
    }
    for &(x, y) in &links {
        add_loz(&mut b, x, y, params.p, params.l)?;
    }
    b.build()
}

pub fn build_tw_g(params: &TwParams) -> Result<Structure> {
    build_tw(params, TwSide::G, TwStage::Complete)
}

pub fn build_tw_h(params: &TwParams) -> Result<Structure> {
    build_tw(params, TwSide::H, TwStage::Complete)
}

/// Multiset of word labels, read from source annotations.
pub fn word_labels(s: &Structure) -> BTreeMap<Word, usize> {
    let mut out = BTreeMap::new();
    for a in s.annotations() {
        if let Role::SourceWord { word } = &a.role {
            *out.entry(word.clone()).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::plan::plan_tw;

    fn micro() -> TwParams {
        TwParams::with_n(&plan_tw(1, 1, 1).unwrap(), 4).unwrap()
    }

    #[test]
    fn loz_shape() {
        let z = make_loz(1, 1).unwrap();
        assert_eq!(z.len(), 6);
        assert_eq!(z.edge_count(), 6);
        assert_eq!((z.degree(0).unwrap(), z.degree(1).unwrap()), (2, 2));
        assert_eq!(z.gaifman_distance(0, 1).unwrap(), Some(3));
        for (p, l) in [(2, 2), (3, 1), (2, 5)] {
            let z = make_loz(p, l).unwrap();
            assert_eq!(z.len(), loz_size(p, l));
            assert_eq!(z.gaifman_distance(0, 1).unwrap(), Some(2 * p as usize + l));
        }
    }

    /// Edge-disjoint augmenting paths between the sources of a unit-capacity graph.
    fn max_flow(s: &Structure, src: usize, dst: usize) -> usize {
        let n = s.len();
        let mut cap = vec![vec![0i32; n]; n];
        for x in s.elements() {
            for &y in s.neighbors(x) {
                cap[x][y] = 1;
            }
        }
        let mut flow = 0;
        loop {
            let mut prev = vec![usize::MAX; n];
            prev[src] = src;
            let mut queue = std::collections::VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if cap[u][v] > 0 && prev[v] == usize::MAX {
                        prev[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if prev[dst] == usize::MAX {
                return flow;
            }
            let mut v = dst;
            while v != src {
                let u = prev[v];
                cap[u][v] -= 1;
                cap[v][u] += 1;
                v = u;
            }
            flow += 1;
        }
    }

    #[test]
    fn loz_has_disjoint_paths_per_leaf_pair() {
        // Each source has degree 2, so split it into 2^p leaf-level cuts instead:
        // the number of edge-disjoint leaf-to-leaf paths through the middle is 2^p.
        let z = make_loz(2, 3).unwrap();
        let leaves: Vec<usize> = z
            .elements()
            .filter(|&x| matches!(z.annotation(x).role, Role::LozLeaf { .. }))
            .collect();
        assert_eq!(leaves.len(), 8);
        let mut b = StructureBuilder::from_structure(&z);
        let (sa, sb) = (b.add_plain(), b.add_plain());
        for &x in &leaves {
            let near_a = z.gaifman_distance(0, x).unwrap() < z.gaifman_distance(1, x).unwrap();
            b.add_edge(if near_a { sa } else { sb }, x).unwrap();
        }
        let g = b.build().unwrap();
        assert_eq!(max_flow(&g, sa, sb), 4);
    }

    #[test]
    fn word_labels_are_coloured_paths() {
        let single = StructureBuilder::colored_graph();
        let mut single = single;
        single.add_plain();
        let s = single.build().unwrap();
        let same = attach_word_label(&s, 0, &Word::empty()).unwrap();
        assert_eq!(same, s);
        let w: Word = "10".parse().unwrap();
        let t = attach_word_label(&s, 0, &w).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.degree(0).unwrap(), 1);
        assert!(t.has_label(1, 2) && t.has_label(2, 1));
        assert!(attach_word_label(&s, 4, &w).is_err());
    }

    #[test]
    fn micro_sources_and_degree() {
        let params = micro();
        assert_eq!(params.h, 0);
        for s in [build_tw_g(&params).unwrap(), build_tw_h(&params).unwrap()] {
            assert_eq!(word_labels(&s).len(), 31);
            assert_eq!(s.max_degree(), 5);
            assert_eq!(s.connected_components().len(), 1);
        }
        let g = build_tw_g(&params).unwrap();
        let h = build_tw_h(&params).unwrap();
        assert_eq!(g.len(), h.len());
        assert_eq!(word_labels(&g), word_labels(&h));
    }

    #[test]
    fn partial_g_has_one_component_per_zero_chain() {
        let params = micro();
        let s = build_tw(&params, TwSide::G, TwStage::InterLinks).unwrap();
        assert_eq!(s.connected_components().len(), 1 << params.n);
    }

    #[test]
    fn inter_links_use_distinct_leaves() {
        // n = 7, k = 1 gives h = 1 and two h-trees with 32 leaves ending in 1 each.
        let plan = plan_tw(1, 1, 0).unwrap();
        let params = TwParams::with_n(&plan, 7).unwrap();
        assert_eq!(params.h, 1);
        let links = inter_links(&params).unwrap();
        assert_eq!(links.len(), 5);
        let mut used: Vec<usize> = links.iter().flat_map(|&(x, y)| [x, y]).collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), 10);
        let s = build_tw_g(&params).unwrap();
        assert_eq!(s.max_degree(), 5);
        assert_eq!(s.connected_components().len(), 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let params = micro();
        assert_eq!(build_tw_g(&params).unwrap(), build_tw_g(&params).unwrap());
    }
}
