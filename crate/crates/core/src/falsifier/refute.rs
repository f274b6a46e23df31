//! Pairwise similarity search between the decompositions of two structures.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::enumerate::{enumerate_decompositions, SearchConfig};
use crate::decomp::{bfs_order, span, width, TreeDecomposition};
use crate::ef::{ef_equivalent_with, Budget};
use crate::structure::RelationSymbol;
use crate::{Error, Result, Structure, StructureBuilder, Vocabulary};

/// Name of the parent-to-child relation of tree structures.
pub const TREE_EDGE: &str = "S";

/// Numbering of the bag classes occurring in a family of decompositions.
#[derive(Clone, Debug, Default)]
pub struct Palette {
    ids: BTreeMap<String, usize>,
}

impl Palette {
    pub fn from_decompositions<'a>(tds: impl IntoIterator<Item = &'a TreeDecomposition>) -> Result<Self> {
        let mut codes = std::collections::BTreeSet::new();
        for td in tds {
            for bag in &td.bags {
                codes.insert(serde_json::to_string(&bag.class(&td.vocab))?);
            }
        }
        Ok(Palette { ids: codes.into_iter().enumerate().map(|(i, c)| (c, i)).collect() })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, td: &TreeDecomposition, node: usize) -> Result<usize> {
        let code = serde_json::to_string(&td.bags[node].class(&td.vocab))?;
        self.ids
            .get(&code)
            .copied()
            .ok_or_else(|| Error::Parameter(format!("bag class of node {node} is not in the palette")))
    }

    /// Bits needed to write every class id.
    fn bits(&self) -> usize {
        (usize::BITS - self.len().saturating_sub(1).leading_zeros()) as usize
    }

    pub fn vocabulary(&self) -> Result<Vocabulary> {
        let mut rels = vec![RelationSymbol::new(TREE_EDGE, 2)];
        rels.extend((0..self.bits()).map(|j| RelationSymbol::new(format!("b{j}"), 1)));
        Vocabulary::new(rels)
    }
}

/// The decomposition as a coloured rooted tree: one element per node,
/// `S(parent, child)`, and the palette id of each bag written in binary over
/// the unary relations `b0, b1, ...`. Two nodes share an atomic type exactly
/// when their bags share a class.
pub fn tau_structure(td: &TreeDecomposition, palette: &Palette) -> Result<Structure> {
    let mut b = StructureBuilder::new(palette.vocabulary()?);
    b.add_elements(td.len());
    for t in 0..td.len() {
        let id = palette.id(td, t)?;
        for j in 0..palette.bits() {
            if id >> j & 1 == 1 {
                b.set_label(t, &format!("b{j}"))?;
            }
        }
        if let Some(p) = td.parent[t] {
            b.add_tuple(TREE_EDGE, &[p, t])?;
        }
    }
    b.build()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairOutcome {
    Similar,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefuteReport {
    pub k: usize,
    pub delta: usize,
    pub alpha: usize,
    pub g_complete: bool,
    pub h_complete: bool,
    #[serde(skip)]
    pub g: Vec<TreeDecomposition>,
    #[serde(skip)]
    pub h: Vec<TreeDecomposition>,
    #[serde(skip)]
    pub palette: Palette,
    pub pairs_checked: usize,
    /// `(index into g, index into h, outcome)` for pairs that were not
    /// shown dissimilar.
    pub pairs: Vec<(usize, usize, PairOutcome)>,
}

impl RefuteReport {
    /// Both enumerations finished and every pair was decided.
    pub fn exhaustive(&self) -> bool {
        self.g_complete && self.h_complete && self.pairs.iter().all(|p| p.2 != PairOutcome::Inconclusive)
    }

    pub fn similar(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().filter(|p| p.2 == PairOutcome::Similar).map(|p| (p.0, p.1))
    }

    /// One JSON record per decomposition, per undecided or similar pair, and
    /// a closing summary.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for (side, tds) in [("G", &self.g), ("H", &self.h)] {
            for (i, td) in tds.iter().enumerate() {
                let order = bfs_order(td)?;
                let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &t)| (t, i)).collect();
                let tree: Vec<(Option<usize>, usize)> = order
                    .iter()
                    .map(|&t| Ok((td.parent[t].map(|p| pos[&p]), self.palette.id(td, t)?)))
                    .collect::<Result<_>>()?;
                let rec = json!({
                    "record": "decomposition",
                    "side": side,
                    "index": i,
                    "nodes": td.len(),
                    "width": width(td),
                    "span": span(td)?,
                    "tree": tree,
                });
                out.push_str(&rec.to_string());
                out.push('\n');
            }
        }
        for (i, j, outcome) in &self.pairs {
            let rec = json!({ "record": "pair", "g": i, "h": j, "outcome": outcome });
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        let summary = json!({
            "record": "summary",
            "k": self.k,
            "delta": self.delta,
            "alpha": self.alpha,
            "g_decompositions": self.g.len(),
            "h_decompositions": self.h.len(),
            "g_complete": self.g_complete,
            "h_complete": self.h_complete,
            "bag_classes": self.palette.len(),
            "pairs_checked": self.pairs_checked,
            "similar": self.similar().count(),
            "exhaustive": self.exhaustive(),
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        Ok(out)
    }
}

/// Enumerates the decompositions of `g` and `h` within `cfg` and plays the
/// `alpha`-round game on every pair of their tree structures. `game_budget`
/// bounds each game separately; exhausted games are reported as
/// inconclusive.
pub fn micro_refute(
    g: &Structure,
    h: &Structure,
    cfg: &SearchConfig,
    alpha: usize,
    game_budget: Budget,
) -> Result<RefuteReport> {
    if g.vocab() != h.vocab() {
        return Err(Error::VocabularyMismatch);
    }
    let eg = enumerate_decompositions(g, cfg)?;
    let eh = enumerate_decompositions(h, cfg)?;
    let palette = Palette::from_decompositions(eg.decompositions.iter().chain(&eh.decompositions))?;
    let tg: Vec<Structure> = eg.decompositions.iter().map(|td| tau_structure(td, &palette)).collect::<Result<_>>()?;
    let th: Vec<Structure> = eh.decompositions.iter().map(|td| tau_structure(td, &palette)).collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let indices: Vec<(usize, usize)> = (0..tg.len()).flat_map(|i| (0..th.len()).map(move |j| (i, j))).collect();
    let outcomes: Vec<Result<Option<PairOutcome>>> = pool.install(|| {
        indices
            .par_iter()
            .map(|&(i, j)| match ef_equivalent_with(&tg[i], &th[j], alpha, game_budget) {
                Ok(true) => Ok(Some(PairOutcome::Similar)),
                Ok(false) => Ok(None),
                Err(Error::BudgetExceeded { .. }) => Ok(Some(PairOutcome::Inconclusive)),
                Err(e) => Err(e),
            })
            .collect()
    });
    let mut pairs = Vec::new();
    for (&(i, j), o) in indices.iter().zip(outcomes) {
        if let Some(o) = o? {
            pairs.push((i, j, o));
        }
    }
    Ok(RefuteReport {
        k: cfg.k,
        delta: cfg.delta,
        alpha,
        g_complete: eg.complete,
        h_complete: eh.complete,
        g: eg.decompositions,
        h: eh.decompositions,
        palette,
        pairs_checked: indices.len(),
        pairs,
    })
}
