//! Checkers evaluated on a single decomposition: run co-occurrence, the
//! distance bound between bags of nearby elements, joint overlap profiles,
//! minimal subtrees over marked elements and degree trimming.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::decomp::{ext, QuotientMap, TreeDecomposition, TreeMetric};
use crate::structure::Role;
use crate::{Error, Result, Structure};

fn run_value(role: &Role) -> Option<usize> {
    match *role {
        Role::RunMember { run_value, .. } => run_value,
        _ => None,
    }
}

/// Whether some bag holds an element of an `n1`-run and an element of an
/// `n2`-run. Run membership is read from generator annotations.
pub fn check_supp(td: &TreeDecomposition, s: &Structure, n: usize, n1: usize, n2: usize) -> Result<bool> {
    if n1 > n || n2 > n {
        return Err(Error::Parameter(format!("run values {n1}, {n2} exceed n = {n}")));
    }
    if !s.annotations().iter().any(|a| run_value(&a.role).is_some()) {
        return Err(Error::MissingAnnotations("no coloured run members".into()));
    }
    Ok(td.bags.iter().any(|bag| {
        let values: BTreeSet<usize> =
            bag.elements.iter().filter_map(|e| run_value(&e.annotation.role)).collect();
        values.contains(&n1) && values.contains(&n2)
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lemma1Violation {
    /// Elements of `ext(td)`.
    pub x: usize,
    pub y: usize,
    pub distance: usize,
    pub bag_distance: usize,
    pub bound: usize,
}

/// Checks that for all elements `x`, `y` at finite Gaifman distance `d` in
/// `ext(td)`, every bag holding `x` is within `delta * (d + 1)` of every bag
/// holding `y`. Returns the first violating pair.
pub fn check_lemma1(td: &TreeDecomposition, delta: usize) -> Result<Option<Lemma1Violation>> {
    let (s, q) = ext(td)?;
    let metric = TreeMetric::new(td)?;
    let nodes: Vec<Vec<usize>> = (0..q.num_classes()).map(|c| occurrence_nodes(&q, c)).collect();
    for x in 0..s.len() {
        let dist = s.distances_from(x)?;
        for y in x..s.len() {
            let Some(d) = dist[y] else { continue };
            let bound = delta * (d + 1);
            for &a in &nodes[x] {
                for &b in &nodes[y] {
                    let bag_distance = metric.distance(a, b);
                    if bag_distance > bound {
                        return Ok(Some(Lemma1Violation { x, y, distance: d, bag_distance, bound }));
                    }
                }
            }
        }
    }
    Ok(None)
}

fn occurrence_nodes(q: &QuotientMap, class: usize) -> Vec<usize> {
    let mut v: Vec<usize> = q.occurrences(class).map(|o| o.iter().map(|&(t, _)| t).collect()).unwrap_or_default();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OverlapEntry {
    /// `(block, index)` of the two consecutive joints.
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub min_distance: usize,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OverlapProfile {
    pub threshold: usize,
    pub entries: Vec<OverlapEntry>,
}

impl OverlapProfile {
    pub fn flagged(&self) -> impl Iterator<Item = &OverlapEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }
}

/// Least tree distance between bags of consecutive joints, compared with
/// `2 delta (2^beta + 1)`.
pub fn overlap_profile(td: &TreeDecomposition, delta: usize, beta: u32) -> Result<OverlapProfile> {
    let (s, q) = ext(td)?;
    let metric = TreeMetric::new(td)?;
    let mut joints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for x in 0..s.len() {
        if let Role::Joint { block, index } = s.annotation(x).role {
            joints.insert((block, index), x);
        }
    }
    if joints.len() < 2 {
        return Err(Error::MissingAnnotations("fewer than two joints".into()));
    }
    let threshold = 2 * delta * ((1usize << beta) + 1);
    let keys: Vec<(usize, usize)> = joints.keys().copied().collect();
    let entries = keys
        .windows(2)
        .map(|w| {
            let a = occurrence_nodes(&q, joints[&w[0]]);
            let b = occurrence_nodes(&q, joints[&w[1]]);
            let min_distance = a
                .iter()
                .flat_map(|&u| b.iter().map(move |&v| (u, v)))
                .map(|(u, v)| metric.distance(u, v))
                .min()
                .unwrap_or(usize::MAX);
            OverlapEntry { from: w[0], to: w[1], min_distance, flagged: min_distance > threshold }
        })
        .collect();
    Ok(OverlapProfile { threshold, entries })
}

/// Tree nodes whose bags hold at least one element of `marked` (elements of
/// `ext(td)`).
pub fn marked_nodes(td: &TreeDecomposition, marked: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    let (_, q) = ext(td)?;
    let mut out = BTreeSet::new();
    for &c in marked {
        out.extend(q.occurrences(c)?.iter().map(|&(t, _)| t));
    }
    Ok(out)
}

/// Smallest subtree containing every bag that holds a marked element.
pub fn minimal_connecting_subtree(td: &TreeDecomposition, marked: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    let required = marked_nodes(td, marked)?;
    if required.is_empty() {
        return Ok(required);
    }
    let adj = adjacency(td);
    let mut alive: BTreeSet<usize> = (0..td.len()).collect();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut leaves: Vec<usize> = (0..td.len()).filter(|&t| degree[t] <= 1 && !required.contains(&t)).collect();
    while let Some(t) = leaves.pop() {
        if !alive.contains(&t) {
            continue;
        }
        alive.remove(&t);
        for &u in &adj[t] {
            if alive.contains(&u) {
                degree[u] -= 1;
                if degree[u] <= 1 && !required.contains(&u) {
                    leaves.push(u);
                }
            }
        }
    }
    Ok(alive)
}

pub(crate) fn adjacency(td: &TreeDecomposition) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); td.len()];
    for (u, p) in td.parent.iter().enumerate() {
        if let Some(p) = *p {
            adj[u].push(p);
            adj[p].push(u);
        }
    }
    adj
}

/// Components of `subtree - {t}` as `(neighbour of t, sorted nodes)`.
pub(crate) fn hanging_components(
    adj: &[Vec<usize>],
    subtree: &BTreeSet<usize>,
    t: usize,
) -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    for &start in adj[t].iter().filter(|u| subtree.contains(u)) {
        let mut comp = vec![start];
        let mut stack = vec![(start, t)];
        while let Some((u, from)) = stack.pop() {
            for &v in &adj[u] {
                if v != from && subtree.contains(&v) {
                    comp.push(v);
                    stack.push((v, u));
                }
            }
        }
        comp.sort_unstable();
        out.push((start, comp));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "finding", rename_all = "kebab-case")]
pub enum TrimFinding {
    /// Trimming at `node` left more than `2k + 3` neighbours.
    DegreeRemains { node: usize, degree: usize },
    /// A marked element no longer occurs in the subtree.
    LostMark { element: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrimResult {
    pub nodes: BTreeSet<usize>,
    pub findings: Vec<TrimFinding>,
}

impl TrimResult {
    pub fn max_degree(&self, td: &TreeDecomposition) -> usize {
        let adj = adjacency(td);
        self.nodes
            .iter()
            .map(|&t| adj[t].iter().filter(|u| self.nodes.contains(u)).count())
            .max()
            .unwrap_or(0)
    }
}

/// Repeatedly picks a node of degree above `2k + 3` and removes the hanging
/// components in which every marked element also occurs in that node's bag.
pub fn trim_to_bounded_degree(
    subtree: &BTreeSet<usize>,
    td: &TreeDecomposition,
    marked: &BTreeSet<usize>,
    k: usize,
) -> Result<TrimResult> {
    let (_, q) = ext(td)?;
    let adj = adjacency(td);
    let limit = 2 * k + 3;
    let mut nodes = subtree.clone();
    let mut findings = Vec::new();
    let mut stuck: BTreeSet<usize> = BTreeSet::new();
    loop {
        let pick = nodes.iter().copied().find(|&t| {
            !stuck.contains(&t) && adj[t].iter().filter(|u| nodes.contains(u)).count() > limit
        });
        let Some(t) = pick else { break };
        let here: BTreeSet<usize> = q.bag_classes(t).iter().copied().collect();
        for (_, comp) in hanging_components(&adj, &nodes, t) {
            let exclusive = comp
                .iter()
                .flat_map(|&u| q.bag_classes(u).iter())
                .any(|c| marked.contains(c) && !here.contains(c));
            if !exclusive {
                for u in comp {
                    nodes.remove(&u);
                }
            }
        }
        let degree = adj[t].iter().filter(|u| nodes.contains(u)).count();
        if degree > limit {
            findings.push(TrimFinding::DegreeRemains { node: t, degree });
            stuck.insert(t);
        }
    }
    for &c in marked {
        if !q.occurrences(c)?.iter().any(|(t, _)| nodes.contains(t)) {
            findings.push(TrimFinding::LostMark { element: c });
        }
    }
    Ok(TrimResult { nodes, findings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{encode_classical, span, ClassicalDecomposition};
    use crate::gadgets::{canonical_pd_pw, make_bicol, make_bicolit, PwParams};
    use crate::structure::path_graph;
    use crate::StructureBuilder;

    fn single_bag(s: &Structure) -> TreeDecomposition {
        let d = ClassicalDecomposition::path(vec![(0..s.len()).collect()]);
        encode_classical(s, &d, s.len() - 1).unwrap()
    }

    fn marks(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn supp_on_bicol_witness() {
        let p = PwParams::micro();
        let s = make_bicol(p.beta, p.p, p.n, 0, 1).unwrap();
        let td = canonical_pd_pw(&s).unwrap();
        assert!(check_supp(&td, &s, p.n, 0, 1).unwrap());
        assert!(check_supp(&single_bag(&s), &s, p.n, 0, 1).unwrap());
    }

    #[test]
    fn supp_needs_both_values() {
        let p = PwParams::micro();
        let s = make_bicol(p.beta, p.p, p.n, 1, 1).unwrap();
        assert!(!check_supp(&single_bag(&s), &s, p.n, 1, 2).unwrap());
        assert!(check_supp(&single_bag(&s), &s, p.n, 1, 1).unwrap());
        assert!(matches!(check_supp(&single_bag(&s), &s, p.n, 1, 9), Err(Error::Parameter(_))));
    }

    #[test]
    fn supp_requires_annotations() {
        let s = path_graph(3);
        assert!(matches!(check_supp(&single_bag(&s), &s, 3, 0, 1), Err(Error::MissingAnnotations(_))));
    }

    #[test]
    fn lemma1_detects_underestimated_span() {
        let s = path_graph(3);
        let d = ClassicalDecomposition::path(vec![vec![0, 1], vec![1], vec![1, 2]]);
        let td = encode_classical(&s, &d, 1).unwrap();
        assert_eq!(span(&td).unwrap(), 2);
        assert_eq!(check_lemma1(&td, 2).unwrap(), None);
        let v = check_lemma1(&td, 1).unwrap().unwrap();
        assert_eq!((v.distance, v.bag_distance, v.bound), (0, 2, 1));
    }

    #[test]
    fn lemma1_adjacent_pair_with_unit_span() {
        let s = path_graph(4);
        let d = ClassicalDecomposition::path(vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
        let td = encode_classical(&s, &d, 1).unwrap();
        assert_eq!(span(&td).unwrap(), 1);
        assert_eq!(check_lemma1(&td, 1).unwrap(), None);
    }

    #[test]
    fn overlap_of_canonical_bicolit_is_within_threshold() {
        let p = PwParams::micro();
        let s = make_bicolit(p.beta, p.p, p.n, 0, 1, p.m).unwrap();
        let td = canonical_pd_pw(&s).unwrap();
        let prof = overlap_profile(&td, span(&td).unwrap().max(1), p.beta).unwrap();
        assert_eq!(prof.entries.len(), p.m);
        assert_eq!(prof.flagged().count(), 0);
        let flat = overlap_profile(&single_bag(&s), 1, p.beta).unwrap();
        assert!(flat.entries.iter().all(|e| e.min_distance == 0));
    }

    /// Sweeps both internal paths of a single coloured gadget side by side.
    #[test]
    fn stretched_sweep_is_flagged_and_forces_supp() {
        let (beta, p, n) = (0, 2, 3);
        let s = make_bicol(beta, p, n, 0, 1).unwrap();
        let len = (s.len() - 2) / 2;
        let top: Vec<usize> = (2..2 + len).collect();
        let bottom: Vec<usize> = (2 + len..2 + 2 * len).collect();
        let mut bags = vec![vec![0, top[0], bottom[0]]];
        for j in 1..len {
            bags.push(vec![top[j - 1], top[j], bottom[j - 1], bottom[j]]);
        }
        bags.push(vec![top[len - 1], bottom[len - 1], 1]);
        let td = encode_classical(&s, &ClassicalDecomposition::path(bags), 3).unwrap();
        assert_eq!(span(&td).unwrap(), 1);
        let prof = overlap_profile(&td, 1, beta).unwrap();
        assert_eq!(prof.flagged().count(), 1);
        assert!(check_supp(&td, &s, n, 0, 1).unwrap());
    }

    fn p5_path_td() -> TreeDecomposition {
        let s = path_graph(5);
        let d = ClassicalDecomposition::path(vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]);
        encode_classical(&s, &d, 1).unwrap()
    }

    #[test]
    fn minimal_subtree_examples() {
        let td = p5_path_td();
        assert_eq!(minimal_connecting_subtree(&td, &marks(&[0])).unwrap(), marks(&[0]));
        assert_eq!(minimal_connecting_subtree(&td, &marks(&[0, 4])).unwrap(), marks(&[0, 1, 2, 3]));
        assert_eq!(minimal_connecting_subtree(&td, &marks(&[2])).unwrap(), marks(&[1, 2]));
    }

    /// Star graph centred at 0 decomposed as a star of bags `{0, i}` around `{0}`.
    pub(crate) fn star_td(leaves: usize) -> TreeDecomposition {
        let mut b = StructureBuilder::colored_graph();
        b.add_elements(leaves + 1);
        for i in 1..=leaves {
            b.add_edge(0, i).unwrap();
        }
        let s = b.build().unwrap();
        let mut parent = vec![None];
        let mut bags = vec![vec![0]];
        for i in 1..=leaves {
            parent.push(Some(0));
            bags.push(vec![0, i]);
        }
        encode_classical(&s, &ClassicalDecomposition::new(parent, bags), 1).unwrap()
    }

    #[test]
    fn trim_star_keeps_marked_branches() {
        let td = star_td(6);
        let all: BTreeSet<usize> = (0..7).collect();
        let r = trim_to_bounded_degree(&all, &td, &marks(&[1, 2]), 1).unwrap();
        assert_eq!(r.nodes, marks(&[0, 1, 2]));
        assert!(r.findings.is_empty());
        assert!(r.max_degree(&td) <= 5);
        let r = trim_to_bounded_degree(&all, &td, &marks(&[0]), 1).unwrap();
        assert_eq!(r.nodes, marks(&[0]));
    }

    #[test]
    fn trim_leaves_paths_alone_and_reports_excess() {
        let td = p5_path_td();
        let all: BTreeSet<usize> = (0..4).collect();
        let r = trim_to_bounded_degree(&all, &td, &marks(&[0, 4]), 0).unwrap();
        assert_eq!(r.nodes, all);
        let star = star_td(6);
        let every: BTreeSet<usize> = (0..7).collect();
        let r = trim_to_bounded_degree(&every, &star, &(1..7).collect(), 1).unwrap();
        assert_eq!(r.findings, vec![TrimFinding::DegreeRemains { node: 0, degree: 6 }]);
    }
}
