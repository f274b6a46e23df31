//! Inode censuses around a tree node, the large component, and the walk
//! that follows large components until it turns back on itself.

use std::collections::BTreeSet;

use serde::Serialize;

use super::checks::{adjacency, hanging_components};
use crate::decomp::{ext, TreeDecomposition};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentCount {
    /// Neighbour of the centre through which the component hangs; `None`
    /// for synthetic censuses.
    pub neighbor: Option<usize>,
    /// Marked elements occurring in this component and nowhere else.
    pub exclusive: usize,
}

/// Distribution of marked elements around a node `t` of a subtree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InodeCensus {
    pub center: Option<usize>,
    pub components: Vec<ComponentCount>,
    /// Marked elements in the bag of the centre.
    pub in_center: usize,
}

impl InodeCensus {
    pub fn from_counts(counts: &[usize], in_center: usize) -> Self {
        InodeCensus {
            center: None,
            components: counts.iter().map(|&c| ComponentCount { neighbor: None, exclusive: c }).collect(),
            in_center,
        }
    }

    pub fn total(&self) -> usize {
        self.in_center + self.components.iter().map(|c| c.exclusive).sum::<usize>()
    }
}

/// Counts, per component of `subtree - {t}`, the marked elements of
/// `ext(td)` that occur only there.
pub fn inode_census(
    subtree: &BTreeSet<usize>,
    td: &TreeDecomposition,
    t: usize,
    marked: &BTreeSet<usize>,
) -> Result<InodeCensus> {
    if !subtree.contains(&t) {
        return Err(Error::UnknownNode(t));
    }
    let (_, q) = ext(td)?;
    let adj = adjacency(td);
    let here: BTreeSet<usize> = q.bag_classes(t).iter().copied().collect();
    let in_center = marked.intersection(&here).count();
    let components = hanging_components(&adj, subtree, t)
        .into_iter()
        .map(|(neighbor, comp)| {
            let inside: BTreeSet<usize> = comp.iter().flat_map(|&u| q.bag_classes(u).iter().copied()).collect();
            let exclusive = inside.iter().filter(|c| marked.contains(c) && !here.contains(c)).count();
            ComponentCount { neighbor: Some(neighbor), exclusive }
        })
        .collect();
    Ok(InodeCensus { center: Some(t), components, in_center })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LargeComponent {
    /// Index into `census.components`.
    pub component: Option<usize>,
    pub threshold: i128,
    /// Components whose count lies in `[N, total - (k + 1) - N]`.
    pub band: Vec<usize>,
}

/// The component holding more than `total - (k + 1) - N` exclusive marks.
pub fn large_component(census: &InodeCensus, big_n: u64, total: usize, k: usize) -> Result<LargeComponent> {
    let threshold = total as i128 - (k as i128 + 1) - big_n as i128;
    let above: Vec<usize> = census
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| c.exclusive as i128 > threshold)
        .map(|(i, _)| i)
        .collect();
    if above.len() > 1 {
        return Err(Error::ImpossibleCensus(above));
    }
    let band = census
        .components
        .iter()
        .enumerate()
        .filter(|(_, c)| (big_n as i128..=threshold).contains(&(c.exclusive as i128)))
        .map(|(i, _)| i)
        .collect();
    Ok(LargeComponent { component: above.first().copied(), threshold, band })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "halt", rename_all = "kebab-case")]
pub enum WalkHalt {
    /// The walk went `t1, t2, t1`.
    Backtrack { t1: usize, t2: usize, step: usize },
    NoLargeComponent { node: usize },
    StepsExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WalkReport {
    pub trace: Vec<usize>,
    pub halt: WalkHalt,
    /// `(node, component indices)` of every census with band findings.
    pub band_findings: Vec<(usize, Vec<usize>)>,
}

/// Walks from `start`, moving to `next(t)` until the walk immediately
/// returns to the node it came from. `next` returns `None` where no large
/// component exists.
pub fn walk_with<F>(start: usize, max_steps: usize, mut next: F) -> Result<WalkReport>
where
    F: FnMut(usize) -> Result<Option<usize>>,
{
    let mut trace = vec![start];
    for _ in 0..max_steps {
        let t = *trace.last().expect("trace is nonempty");
        let Some(u) = next(t)? else {
            return Ok(WalkReport { trace, halt: WalkHalt::NoLargeComponent { node: t }, band_findings: Vec::new() });
        };
        trace.push(u);
        let n = trace.len();
        if n >= 3 && trace[n - 1] == trace[n - 3] {
            let halt = WalkHalt::Backtrack { t1: trace[n - 3], t2: trace[n - 2], step: n };
            return Ok(WalkReport { trace, halt, band_findings: Vec::new() });
        }
    }
    Ok(WalkReport { trace, halt: WalkHalt::StepsExhausted, band_findings: Vec::new() })
}

/// Starts at the least node of `subtree` and repeatedly steps to the
/// neighbour leading into the large component.
pub fn algorithm1_walk(
    subtree: &BTreeSet<usize>,
    td: &TreeDecomposition,
    marked: &BTreeSet<usize>,
    big_n: u64,
    k: usize,
    max_steps: usize,
) -> Result<WalkReport> {
    let Some(&start) = subtree.first() else {
        return Err(Error::Parameter("empty subtree".into()));
    };
    let total = marked.len();
    let mut band_findings = Vec::new();
    let mut report = walk_with(start, max_steps, |t| {
        let census = inode_census(subtree, td, t, marked)?;
        let large = large_component(&census, big_n, total, k)?;
        if !large.band.is_empty() {
            band_findings.push((t, large.band.clone()));
        }
        Ok(large.component.and_then(|i| census.components[i].neighbor))
    })?;
    report.band_findings = band_findings;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::{encode_classical, ClassicalDecomposition};
    use crate::structure::path_graph;
    use crate::StructureBuilder;

    fn marks(xs: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        xs.into_iter().collect()
    }

    #[test]
    fn census_from_path_endpoint() {
        let s = path_graph(5);
        let d = ClassicalDecomposition::path(vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]);
        let td = encode_classical(&s, &d, 1).unwrap();
        let sub = marks(0..4);
        let c = inode_census(&sub, &td, 0, &marks(0..5)).unwrap();
        assert_eq!(c.in_center, 2);
        assert_eq!(c.components.len(), 1);
        assert_eq!(c.components[0].exclusive, 3);
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn census_of_three_branches() {
        let mut b = StructureBuilder::colored_graph();
        b.add_elements(6);
        for i in 1..6 {
            b.add_edge(0, i).unwrap();
        }
        let s = b.build().unwrap();
        let parent = vec![None, Some(0), Some(0), Some(0), Some(3)];
        let bags = vec![vec![0], vec![0, 1], vec![0, 2], vec![0, 3], vec![0, 4, 5]];
        let d = ClassicalDecomposition::new(parent, bags);
        let td = encode_classical(&s, &d, 2).unwrap();
        let c = inode_census(&marks(0..5), &td, 0, &marks([0, 1, 3, 4, 5])).unwrap();
        let counts: Vec<usize> = c.components.iter().map(|x| x.exclusive).collect();
        assert_eq!(counts, vec![1, 0, 3]);
        assert_eq!(c.in_center, 1);
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn large_component_arithmetic() {
        let c = InodeCensus::from_counts(&[100, 3, 2], 0);
        let l = large_component(&c, 10, 110, 1).unwrap();
        assert_eq!(l.component, Some(0));
        assert_eq!(l.threshold, 98);
        assert!(l.band.is_empty());
        let balanced = InodeCensus::from_counts(&[50, 55], 0);
        let l = large_component(&balanced, 10, 110, 1).unwrap();
        assert_eq!(l.component, None);
        assert_eq!(l.band, vec![0, 1]);
        let empty = InodeCensus::from_counts(&[], 0);
        assert_eq!(large_component(&empty, 10, 110, 1).unwrap().component, None);
        let two = InodeCensus::from_counts(&[5, 5], 0);
        assert!(matches!(large_component(&two, 0, 5, 0), Err(Error::ImpossibleCensus(v)) if v == vec![0, 1]));
    }

    #[test]
    fn walk_between_two_nodes_backtracks_at_step_three() {
        let r = walk_with(0, 10, |t| Ok(Some(1 - t))).unwrap();
        assert_eq!(r.trace, vec![0, 1, 0]);
        assert_eq!(r.halt, WalkHalt::Backtrack { t1: 0, t2: 1, step: 3 });
        let r = walk_with(0, 1, |t| Ok(Some(1 - t))).unwrap();
        assert_eq!(r.halt, WalkHalt::StepsExhausted);
    }

    #[test]
    fn walk_marches_to_absorbing_endpoint() {
        let mut b = StructureBuilder::colored_graph();
        b.add_elements(6);
        for i in 1..6 {
            b.add_edge(0, i).unwrap();
        }
        let s = b.build().unwrap();
        let d = ClassicalDecomposition::path(vec![vec![0], vec![0], vec![0], (0..6).collect()]);
        let td = encode_classical(&s, &d, 5).unwrap();
        let r = algorithm1_walk(&marks(0..4), &td, &marks(1..6), 0, 0, 20).unwrap();
        assert_eq!(r.trace, vec![0, 1, 2, 3]);
        assert_eq!(r.halt, WalkHalt::NoLargeComponent { node: 3 });
    }

    #[test]
    fn walk_on_single_node_halts() {
        let s = path_graph(1);
        let td = encode_classical(&s, &ClassicalDecomposition::path(vec![vec![0]]), 0).unwrap();
        let r = algorithm1_walk(&marks([0]), &td, &marks([0]), 0, 0, 5).unwrap();
        assert_eq!(r.trace, vec![0]);
        assert_eq!(r.halt, WalkHalt::NoLargeComponent { node: 0 });
    }
}
