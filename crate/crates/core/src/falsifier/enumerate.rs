//! Exhaustive search for width- and span-bounded decompositions of small
//! structures.
//!
//! The search runs in two layers. Classical decompositions (trees of element
//! subsets) are enumerated per unlabelled rooted tree shape, with nodes filled
//! in an order where every parent precedes its children. Each classical
//! decomposition is then encoded as k-bags under every admissible assignment
//! of interface indices and deduplicated by [`tree_code`].
//!
//! Bags carry the full substructure induced on their elements. Splitting a
//! tuple or a colour across bags that share the same elements is not
//! explored.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{encode_classical, tree_code, ClassicalDecomposition, TreeDecomposition};
use crate::{Error, Result, Structure};

/// Largest structure accepted by the search (bags are stored as bit masks).
pub const MAX_SEARCH_ELEMENTS: usize = 32;

/// How interface indices are attached to an enumerated classical
/// decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexMode {
    /// One encoding per classical decomposition, as [`encode_classical`].
    Canonical,
    /// Every injective choice of out-indices at every node.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k: usize,
    pub delta: usize,
    pub path_only: bool,
    /// Largest number of tree nodes considered.
    pub max_tree_nodes: usize,
    /// Cap on explored search states; `None` is unbounded.
    pub max_states: Option<u64>,
    pub max_seconds: Option<f64>,
    pub workers: usize,
    pub index_mode: IndexMode,
}

impl SearchConfig {
    pub fn new(k: usize, delta: usize) -> Self {
        SearchConfig {
            k,
            delta,
            path_only: false,
            max_tree_nodes: 6,
            max_states: Some(20_000_000),
            max_seconds: None,
            workers: 1,
            index_mode: IndexMode::Exhaustive,
        }
    }

    pub fn path_only(mut self, yes: bool) -> Self {
        self.path_only = yes;
        self
    }

    pub fn max_tree_nodes(mut self, n: usize) -> Self {
        self.max_tree_nodes = n;
        self
    }

    pub fn workers(mut self, n: usize) -> Self {
        self.workers = n;
        self
    }

    pub fn index_mode(mut self, mode: IndexMode) -> Self {
        self.index_mode = mode;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.max_tree_nodes == 0 {
            return Err(Error::Parameter("max_tree_nodes must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Parameter("workers must be positive".into()));
        }
        if self.max_states == Some(0) {
            return Err(Error::Parameter("max_states must be positive".into()));
        }
        if matches!(self.max_seconds, Some(s) if s.is_nan() || s <= 0.0) {
            return Err(Error::Parameter("max_seconds must be positive".into()));
        }
        Ok(())
    }
}

/// Result of a search. When `complete` is false the budget ran out and
/// `decompositions` is a prefix-closed partial result.
#[derive(Clone, Debug)]
pub struct Enumeration {
    /// Sorted by tree code, one per class of isomorphic decompositions.
    pub decompositions: Vec<TreeDecomposition>,
    pub complete: bool,
    pub explored: u64,
}

struct Limits {
    explored: AtomicU64,
    stop: AtomicBool,
    max_states: Option<u64>,
    deadline: Option<Instant>,
}

impl Limits {
    fn tick(&self) -> bool {
        let n = self.explored.fetch_add(1, Ordering::Relaxed) + 1;
        if self.stop.load(Ordering::Relaxed) {
            return false;
        }
        let over_states = self.max_states.is_some_and(|m| n > m);
        let over_time = n.is_multiple_of(1024) && self.deadline.is_some_and(|d| Instant::now() > d);
        if over_states || over_time {
            self.stop.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }
}

/// All decompositions of `s` of width at most `cfg.k`, span at most
/// `cfg.delta` and at most `cfg.max_tree_nodes` nodes, up to isomorphism of
/// bag-class-labelled trees.
pub fn enumerate_decompositions(s: &Structure, cfg: &SearchConfig) -> Result<Enumeration> {
    cfg.check()?;
    if s.len() > MAX_SEARCH_ELEMENTS {
        return Err(Error::SearchBound(format!(
            "structure has {} elements, search supports at most {MAX_SEARCH_ELEMENTS}",
            s.len()
        )));
    }
    let limits = Limits {
        explored: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        max_states: cfg.max_states,
        deadline: cfg.max_seconds.map(|x| Instant::now() + Duration::from_secs_f64(x)),
    };
    if s.is_empty() {
        return Ok(Enumeration { decompositions: Vec::new(), complete: true, explored: 0 });
    }
    let problem = Problem::new(s, cfg);
    let shapes = tree_shapes(cfg.max_tree_nodes, cfg.path_only);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let found: Vec<Result<Vec<(String, TreeDecomposition)>>> = pool.install(|| {
        shapes
            .par_iter()
            .map(|shape| {
                let mut classical = Vec::new();
                problem.search_shape(shape, &limits, &mut classical);
                let mut out = Vec::new();
                for d in classical {
                    expand_indices(s, &d, cfg, &limits, &mut out)?;
                }
                Ok(out)
            })
            .collect()
    });
    let mut unique: BTreeMap<String, TreeDecomposition> = BTreeMap::new();
    for part in found {
        for (code, td) in part? {
            unique.entry(code).or_insert(td);
        }
    }
    Ok(Enumeration {
        decompositions: unique.into_values().collect(),
        complete: !limits.stop.load(Ordering::Relaxed),
        explored: limits.explored.load(Ordering::Relaxed),
    })
}

/// Parent arrays (`parent[i] < i`) of one representative per unlabelled
/// rooted tree with at most `max` nodes.
fn tree_shapes(max: usize, path_only: bool) -> Vec<Vec<Option<usize>>> {
    let mut out = Vec::new();
    for t in 1..=max {
        if path_only {
            out.push((0..t).map(|i| i.checked_sub(1)).collect());
            continue;
        }
        let mut seen = HashSet::new();
        let mut parent = vec![None; t];
        shapes_rec(1, &mut parent, &mut seen, &mut out);
    }
    out
}

fn shapes_rec(
    i: usize,
    parent: &mut Vec<Option<usize>>,
    seen: &mut HashSet<String>,
    out: &mut Vec<Vec<Option<usize>>>,
) {
    if i == parent.len() {
        if seen.insert(shape_code(parent)) {
            out.push(parent.clone());
        }
        return;
    }
    for p in 0..i {
        parent[i] = Some(p);
        shapes_rec(i + 1, parent, seen, out);
    }
}

fn shape_code(parent: &[Option<usize>]) -> String {
    let n = parent.len();
    let mut codes = vec![String::from("("); n];
    let mut kids: Vec<Vec<String>> = vec![Vec::new(); n];
    for i in (0..n).rev() {
        let mut sub = std::mem::take(&mut kids[i]);
        sub.sort();
        let mut c = std::mem::take(&mut codes[i]);
        for s in sub {
            c.push_str(&s);
        }
        c.push(')');
        match parent[i] {
            Some(p) => kids[p].push(c),
            None => codes[i] = c,
        }
    }
    codes.swap_remove(0)
}

/// Precomputed data for the classical search over one structure.
struct Problem {
    n: usize,
    k: usize,
    delta: usize,
    /// Candidate bags of size `1..=k+1`.
    candidates: Vec<u32>,
    /// Element sets of tuples of arity at least two.
    tuples: Vec<u32>,
}

impl Problem {
    fn new(s: &Structure, cfg: &SearchConfig) -> Self {
        let n = s.len();
        let full: u64 = (1u64 << n) - 1;
        let candidates = (1..=full)
            .map(|m| m as u32)
            .filter(|m| m.count_ones() as usize <= cfg.k + 1)
            .collect();
        let mut tuples: Vec<u32> = s
            .all_tuples()
            .into_iter()
            .filter(|(_, t)| t.len() >= 2)
            .map(|(_, t)| t.iter().fold(0u32, |m, &x| m | (1 << x)))
            .collect();
        tuples.sort_unstable();
        tuples.dedup();
        Problem { n, k: cfg.k, delta: cfg.delta, candidates, tuples }
    }

    fn search_shape(&self, shape: &[Option<usize>], limits: &Limits, out: &mut Vec<ClassicalDecomposition>) {
        let t = shape.len();
        // Later nodes whose parent is already filled when node i is done.
        let frontier: Vec<Vec<usize>> = (0..t)
            .map(|i| {
                (i + 1..t)
                    .filter_map(|j| shape[j].filter(|&p| p <= i))
                    .collect::<Vec<_>>()
            })
            .collect();
        let dist = shape_distances(shape);
        let mut state = State {
            bags: vec![0; t],
            occ: vec![0; self.n],
            seen: 0,
            codes: HashSet::new(),
        };
        self.fill(0, shape, &frontier, &dist, &mut state, limits, out);
    }

    #[allow(clippy::too_many_arguments)]
    fn fill(
        &self,
        i: usize,
        shape: &[Option<usize>],
        frontier: &[Vec<usize>],
        dist: &[Vec<usize>],
        st: &mut State,
        limits: &Limits,
        out: &mut Vec<ClassicalDecomposition>,
    ) {
        let t = shape.len();
        let all: u32 = ((1u64 << self.n) - 1) as u32;
        if i == t {
            if st.seen == all && self.tuples.iter().all(|&m| st.bags.iter().any(|&b| b & m == m)) {
                let code = labelled_code(shape, &st.bags);
                if st.codes.insert(code) {
                    out.push(to_classical(shape, &st.bags));
                }
            }
            return;
        }
        let allowed = match shape[i] {
            Some(p) => st.bags[p] | !st.seen,
            None => all,
        };
        for &m in &self.candidates {
            if m & !allowed != 0 {
                continue;
            }
            if !limits.tick() {
                return;
            }
            let old = m & st.seen;
            if !self.span_ok(old, i, dist, &st.occ) {
                continue;
            }
            st.bags[i] = m;
            st.seen |= m;
            for x in ones(m) {
                st.occ[x] |= 1 << i;
            }
            if self.feasible(i, t, frontier, st) {
                self.fill(i + 1, shape, frontier, dist, st, limits, out);
            }
            for x in ones(m) {
                st.occ[x] &= !(1 << i);
            }
            st.seen &= !m | old;
            st.bags[i] = 0;
        }
    }

    fn span_ok(&self, old: u32, i: usize, dist: &[Vec<usize>], occ: &[u64]) -> bool {
        ones(old).all(|x| ones64(occ[x]).all(|o| dist[i][o] <= self.delta))
    }

    /// Necessary conditions for completing the partial assignment.
    fn feasible(&self, i: usize, t: usize, frontier: &[Vec<usize>], st: &State) -> bool {
        let all: u32 = ((1u64 << self.n) - 1) as u32;
        let unseen = all & !st.seen;
        if unseen.count_ones() as usize > (t - 1 - i) * (self.k + 1) {
            return false;
        }
        let alive = frontier[i].iter().fold(unseen, |a, &p| a | st.bags[p]);
        self.tuples
            .iter()
            .all(|&m| m & alive == m || st.bags[..=i].iter().any(|&b| b & m == m))
    }
}

struct State {
    bags: Vec<u32>,
    /// Nodes holding each element, as a bit mask over tree nodes.
    occ: Vec<u64>,
    seen: u32,
    /// Labelled codes already emitted for the current shape.
    codes: HashSet<Vec<u32>>,
}

fn ones(m: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| m >> i & 1 == 1)
}

fn ones64(m: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| m >> i & 1 == 1)
}

fn shape_distances(shape: &[Option<usize>]) -> Vec<Vec<usize>> {
    let t = shape.len();
    let mut adj = vec![Vec::new(); t];
    for (i, p) in shape.iter().enumerate() {
        if let Some(p) = *p {
            adj[i].push(p);
            adj[p].push(i);
        }
    }
    (0..t)
        .map(|s| {
            let mut d = vec![usize::MAX; t];
            d[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if d[v] == usize::MAX {
                        d[v] = d[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            d
        })
        .collect()
}

/// AHU code of the shape with node labels, as a flat token sequence.
/// Tokens above `u32::MAX - 1` delimit subtrees.
fn labelled_code(shape: &[Option<usize>], bags: &[u32]) -> Vec<u32> {
    const OPEN: u32 = u32::MAX;
    const CLOSE: u32 = u32::MAX - 1;
    let t = shape.len();
    let mut kids: Vec<Vec<Vec<u32>>> = vec![Vec::new(); t];
    let mut root = Vec::new();
    for i in (0..t).rev() {
        let mut sub = std::mem::take(&mut kids[i]);
        sub.sort();
        let mut c = vec![OPEN, bags[i]];
        for s in sub {
            c.extend(s);
        }
        c.push(CLOSE);
        match shape[i] {
            Some(p) => kids[p].push(c),
            None => root = c,
        }
    }
    root
}

fn to_classical(shape: &[Option<usize>], bags: &[u32]) -> ClassicalDecomposition {
    ClassicalDecomposition::new(shape.to_vec(), bags.iter().map(|&m| ones(m).collect()).collect())
}

/// Encodes `d` under every admissible out-index assignment (or only the
/// canonical one) and appends `(tree code, decomposition)` pairs.
fn expand_indices(
    s: &Structure,
    d: &ClassicalDecomposition,
    cfg: &SearchConfig,
    limits: &Limits,
    out: &mut Vec<(String, TreeDecomposition)>,
) -> Result<()> {
    let base = encode_classical(s, d, cfg.k)?;
    if cfg.index_mode == IndexMode::Canonical {
        out.push((tree_code(&base)?, base));
        return Ok(());
    }
    // Local positions carrying an out-mark, per node.
    let shared: Vec<Vec<usize>> = base
        .bags
        .iter()
        .map(|b| (0..b.len()).filter(|&l| b.elements[l].out_mark.is_some()).collect())
        .collect();
    let mut choice: Vec<Vec<usize>> = shared.iter().map(|v| vec![0; v.len()]).collect();
    let mut seen = HashSet::new();
    assign(0, s, d, &base, &shared, &mut choice, cfg.k, limits, &mut seen, out)
}

#[allow(clippy::too_many_arguments)]
fn assign(
    node: usize,
    s: &Structure,
    d: &ClassicalDecomposition,
    base: &TreeDecomposition,
    shared: &[Vec<usize>],
    choice: &mut Vec<Vec<usize>>,
    k: usize,
    limits: &Limits,
    seen: &mut HashSet<String>,
    out: &mut Vec<(String, TreeDecomposition)>,
) -> Result<()> {
    if node == shared.len() {
        let td = with_indices(s, d, base, shared, choice);
        let code = tree_code(&td)?;
        if seen.insert(code.clone()) {
            out.push((code, td));
        }
        return Ok(());
    }
    let need = shared[node].len();
    let mut used = vec![false; k + 1];
    injections(0, need, &mut used, &mut choice[node].clone(), &mut |c| {
        if !limits.tick() {
            return Ok(false);
        }
        choice[node].copy_from_slice(c);
        assign(node + 1, s, d, base, shared, choice, k, limits, seen, out)?;
        Ok(true)
    })?;
    Ok(())
}

/// Calls `f` on every injective sequence of length `need` over
/// `0..used.len()`; stops early when `f` returns false.
fn injections(
    pos: usize,
    need: usize,
    used: &mut [bool],
    cur: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]) -> Result<bool>,
) -> Result<bool> {
    if pos == need {
        return f(cur);
    }
    for v in 0..used.len() {
        if used[v] {
            continue;
        }
        used[v] = true;
        cur[pos] = v;
        let go = injections(pos + 1, need, used, cur, f)?;
        used[v] = false;
        if !go {
            return Ok(false);
        }
    }
    Ok(true)
}

fn with_indices(
    _s: &Structure,
    d: &ClassicalDecomposition,
    base: &TreeDecomposition,
    shared: &[Vec<usize>],
    choice: &[Vec<usize>],
) -> TreeDecomposition {
    let mut bags = base.bags.clone();
    for (t, locals) in shared.iter().enumerate() {
        for (j, &l) in locals.iter().enumerate() {
            bags[t].elements[l].out_mark = Some(choice[t][j]);
        }
    }
    for (u, p) in d.parent.iter().enumerate() {
        let Some(p) = *p else { continue };
        for (local, x) in d.bags[u].iter().enumerate() {
            if let Ok(pl) = d.bags[p].binary_search(x) {
                bags[u].elements[local].in_mark = bags[p].elements[pl].out_mark;
            }
        }
    }
    TreeDecomposition::new(base.vocab.clone(), base.k, base.parent.clone(), bags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{ext, span, validate_td, width};
    use crate::structure::{is_isomorphic, path_graph, P0};
    use crate::StructureBuilder;

    #[test]
    fn shape_counts_match_rooted_trees() {
        // 1, 1, 2, 4, 9, 20 rooted unlabelled trees.
        let counts: Vec<usize> = (1..=6).map(|t| tree_shapes(t, false).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 8, 17, 37]);
    }

    #[test]
    fn single_node_has_one_bag_decomposition() {
        let mut b = StructureBuilder::colored_graph();
        let x = b.add_plain();
        b.set_label(x, P0).unwrap();
        let s = b.build().unwrap();
        let e = enumerate_decompositions(&s, &SearchConfig::new(0, 0)).unwrap();
        assert!(e.complete);
        assert!(e.decompositions.iter().any(|td| td.len() == 1));
    }

    #[test]
    fn edge_has_no_width_zero_decomposition() {
        let s = path_graph(2);
        let e = enumerate_decompositions(&s, &SearchConfig::new(0, 5)).unwrap();
        assert!(e.complete);
        assert!(e.decompositions.is_empty());
    }

    #[test]
    fn path_decompositions_of_p3_are_valid() {
        let s = path_graph(3);
        let cfg = SearchConfig::new(1, 1).path_only(true);
        let e = enumerate_decompositions(&s, &cfg).unwrap();
        assert!(e.complete);
        assert!(!e.decompositions.is_empty());
        for td in &e.decompositions {
            validate_td(td).unwrap();
            assert_eq!(width(td), 1);
            assert!(span(td).unwrap() <= 1);
            assert!(is_isomorphic(&ext(td).unwrap().0, &s));
        }
    }

    #[test]
    fn output_is_independent_of_worker_count() {
        let s = path_graph(4);
        let cfg = SearchConfig::new(1, 2).max_tree_nodes(5);
        let a = enumerate_decompositions(&s, &cfg).unwrap();
        let b = enumerate_decompositions(&s, &cfg.clone().workers(4)).unwrap();
        let codes = |e: &Enumeration| -> Vec<String> {
            e.decompositions.iter().map(|t| tree_code(t).unwrap()).collect()
        };
        assert_eq!(codes(&a), codes(&b));
    }

    #[test]
    fn tiny_budget_marks_partial() {
        let s = path_graph(4);
        let mut cfg = SearchConfig::new(1, 2);
        cfg.max_states = Some(3);
        let e = enumerate_decompositions(&s, &cfg).unwrap();
        assert!(!e.complete);
    }
}
