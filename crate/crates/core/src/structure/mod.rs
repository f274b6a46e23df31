//! Finite relational structures.
//!
//! Elements are dense ids `0..len()`. Unary relations are stored as a label
//! bitmask per element; relations of higher arity as sorted tuple lists. A
//! binary relation flagged `symmetric` stores each pair once as `(min, max)`
//! and is read in both directions.

mod iso;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::unionfind::UnionFind;
use crate::{Error, Result};

pub use iso::{are_isomorphic, is_isomorphic, Isomorphism, DEFAULT_ISO_BUDGET};

pub const EDGE: &str = "E";
pub const P0: &str = "P0";
pub const P1: &str = "P1";
pub const LESS: &str = "<";

/// Maximum number of relation symbols; labels are packed in a `u128`.
pub const MAX_RELATIONS: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
    #[serde(default)]
    pub symmetric: bool,
}

impl RelationSymbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Self { name: name.into(), arity, symmetric: false }
    }

    pub fn symmetric(name: impl Into<String>) -> Self {
        Self { name: name.into(), arity: 2, symmetric: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Vocabulary {
    relations: Vec<RelationSymbol>,
}

impl Vocabulary {
    pub fn new(relations: Vec<RelationSymbol>) -> Result<Self> {
        if relations.len() > MAX_RELATIONS {
            return Err(Error::InvalidVocabulary(format!(
                "{} relations, at most {MAX_RELATIONS} supported",
                relations.len()
            )));
        }
        let mut names = BTreeSet::new();
        for r in &relations {
            if r.arity == 0 {
                return Err(Error::InvalidVocabulary(format!("`{}` has arity 0", r.name)));
            }
            if r.symmetric && r.arity != 2 {
                return Err(Error::InvalidVocabulary(format!(
                    "`{}` is symmetric but has arity {}",
                    r.name, r.arity
                )));
            }
            if !names.insert(r.name.as_str()) {
                return Err(Error::InvalidVocabulary(format!("duplicate relation `{}`", r.name)));
            }
        }
        Ok(Self { relations })
    }

    /// `{E (symmetric, binary), P0, P1}`.
    pub fn colored_graph() -> Self {
        Self {
            relations: vec![
                RelationSymbol::symmetric(EDGE),
                RelationSymbol::new(P0, 1),
                RelationSymbol::new(P1, 1),
            ],
        }
    }

    /// A single non-symmetric binary relation `<`.
    pub fn linear_order() -> Self {
        Self { relations: vec![RelationSymbol::new(LESS, 2)] }
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn arity(&self, rel: usize) -> usize {
        self.relations[rel].arity
    }

    pub fn is_symmetric(&self, rel: usize) -> bool {
        self.relations.get(rel).is_some_and(|r| r.symmetric)
    }

    pub(crate) fn lookup(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    fn exclusive_colors(&self) -> Option<(usize, usize)> {
        match (self.index_of(P0), self.index_of(P1)) {
            (Some(a), Some(b)) if self.arity(a) == 1 && self.arity(b) == 1 => Some((a, b)),
            _ => None,
        }
    }

    pub fn has_only_small_arities(&self) -> bool {
        self.relations.iter().all(|r| r.arity <= 2)
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::colored_graph()
    }
}

/// A bit string, ordered shortlex (shorter first, then lexicographically).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<bool>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn push(&self, bit: bool) -> Self {
        let mut v = self.0.clone();
        v.push(bit);
        Self(v)
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len].to_vec())
    }

    pub fn ends_with(&self, bit: bool) -> bool {
        self.0.last() == Some(&bit)
    }

    /// All words of length at most `n`, in shortlex order.
    pub fn all_up_to(n: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        let mut layer = vec![Word::empty()];
        for _ in 0..n {
            let next: Vec<Word> =
                layer.iter().flat_map(|w| [w.push(false), w.push(true)]).collect();
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    /// Shortlex rank among all words: `2^len - 1 + value`.
    pub fn rank(&self) -> usize {
        let value = self.0.iter().fold(0usize, |acc, &b| acc * 2 + b as usize);
        (1usize << self.0.len()) - 1 + value
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parameter(format!("invalid bit `{other}` in word"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Top,
    Bottom,
}

/// What a generator says an element is. Never consulted by the logic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "kebab-case")]
pub enum Role {
    #[default]
    Plain,
    SourceS,
    SourceT,
    SourceWord {
        word: Word,
    },
    /// Shared endpoint `s_index` of a `Bicolit` chain.
    Joint {
        block: usize,
        index: usize,
    },
    RunMember {
        block: usize,
        gadget: usize,
        side: Side,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        run_value: Option<usize>,
    },
    LozLeaf {
        pair: usize,
    },
    LabelPath {
        position: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(flatten)]
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub htree: Option<Word>,
}

impl Annotation {
    pub fn plain() -> Self {
        Self::default()
    }

    pub fn role(role: Role) -> Self {
        Self { role, htree: None }
    }

    pub fn is_plain(&self) -> bool {
        self.role == Role::Plain && self.htree.is_none()
    }
}

/// A colour of the colored-graph vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Color {
    P0,
    P1,
}

#[derive(Clone, Debug)]
pub struct Structure {
    vocab: Vocabulary,
    labels: Vec<u128>,
    tuples: Vec<Vec<Vec<usize>>>,
    annotations: Vec<Annotation>,
    gaifman: Vec<Vec<usize>>,
    out_adj: Vec<Vec<Vec<usize>>>,
    in_adj: Vec<Vec<Vec<usize>>>,
    incidence: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab
            && self.labels == other.labels
            && self.tuples == other.tuples
            && self.annotations == other.annotations
    }
}

impl Eq for Structure {}

impl Structure {
    pub fn empty(vocab: Vocabulary) -> Self {
        StructureBuilder::new(vocab).build().expect("empty structure is valid")
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    pub fn labels(&self, x: usize) -> u128 {
        self.labels[x]
    }

    pub fn has_label(&self, x: usize, rel: usize) -> bool {
        self.labels[x] >> rel & 1 == 1
    }

    pub fn color(&self, x: usize) -> Option<Color> {
        let (p0, p1) = self.vocab.exclusive_colors()?;
        if self.has_label(x, p0) {
            Some(Color::P0)
        } else if self.has_label(x, p1) {
            Some(Color::P1)
        } else {
            None
        }
    }

    /// Stored tuples of a relation of arity ≥ 2 (symmetric ones normalised).
    pub fn tuples(&self, rel: usize) -> &[Vec<usize>] {
        &self.tuples[rel]
    }

    /// Elements in a unary relation.
    pub fn members(&self, rel: usize) -> Vec<usize> {
        self.elements().filter(|&x| self.has_label(x, rel)).collect()
    }

    pub fn annotation(&self, x: usize) -> &Annotation {
        &self.annotations[x]
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Gaifman neighbours, sorted, excluding `x` itself.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.gaifman[x]
    }

    pub fn out_neighbors(&self, rel: usize, x: usize) -> &[usize] {
        &self.out_adj[rel][x]
    }

    pub fn in_neighbors(&self, rel: usize, x: usize) -> &[usize] {
        &self.in_adj[rel][x]
    }

    /// `(relation, tuple index)` pairs of arity ≥ 3 tuples containing `x`.
    pub(crate) fn incidence(&self, x: usize) -> &[(usize, usize)] {
        &self.incidence[x]
    }

    pub fn holds_binary(&self, rel: usize, a: usize, b: usize) -> bool {
        self.out_adj[rel][a].binary_search(&b).is_ok()
    }

    pub fn holds(&self, rel: usize, tuple: &[usize]) -> bool {
        match tuple.len() {
            1 => self.has_label(tuple[0], rel),
            2 => self.holds_binary(rel, tuple[0], tuple[1]),
            _ => self.tuples[rel].binary_search_by(|t| t.as_slice().cmp(tuple)).is_ok(),
        }
    }

    /// Every tuple of every relation in a uniform form (unary included).
    pub fn all_tuples(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for rel in 0..self.vocab.len() {
            if self.vocab.arity(rel) == 1 {
                out.extend(self.members(rel).into_iter().map(|x| (rel, vec![x])));
            } else {
                out.extend(self.tuples[rel].iter().map(|t| (rel, t.clone())));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.vocab.index_of(EDGE).map_or(0, |e| self.tuples[e].len())
    }

    fn check(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownElement(x))
        }
    }

    /// Breadth-first distances from `x` in the Gaifman graph (`None` = unreachable).
    pub fn distances_from(&self, x: usize) -> Result<Vec<Option<usize>>> {
        self.check(x)?;
        let mut dist = vec![None; self.len()];
        dist[x] = Some(0);
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.gaifman[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Gaifman distance; `None` when `x` and `y` lie in different components.
    pub fn gaifman_distance(&self, x: usize, y: usize) -> Result<Option<usize>> {
        self.check(y)?;
        Ok(self.distances_from(x)?[y])
    }

    pub fn degree(&self, x: usize) -> Result<usize> {
        self.check(x)?;
        Ok(self.gaifman[x].len())
    }

    pub fn max_degree(&self) -> usize {
        self.gaifman.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.len());
        for (x, nbrs) in self.gaifman.iter().enumerate() {
            for &y in nbrs {
                uf.union(x, y);
            }
        }
        let (ids, count) = uf.classes();
        let mut parts = vec![Vec::new(); count];
        for (x, c) in ids.into_iter().enumerate() {
            parts[c].push(x);
        }
        parts
    }

    /// Elements of `other` are shifted by `self.len()`.
    pub fn disjoint_union(&self, other: &Structure) -> Result<Structure> {
        if self.vocab != other.vocab {
            return Err(Error::VocabularyMismatch);
        }
        let mut b = StructureBuilder::from_structure(self);
        let offset = self.len();
        for x in other.elements() {
            let id = b.add_element(other.annotations[x].clone());
            b.labels[id] = other.labels[x];
        }
        for rel in 0..other.vocab.len() {
            for t in &other.tuples[rel] {
                let shifted: Vec<usize> = t.iter().map(|&x| x + offset).collect();
                b.add_tuple_idx(rel, &shifted)?;
            }
        }
        b.build()
    }

    /// Substructure induced by `elements` (renumbered in the given order).
    pub fn induced(&self, elements: &[usize]) -> Result<Structure> {
        let mut local = vec![usize::MAX; self.len()];
        let mut b = StructureBuilder::new(self.vocab.clone());
        for &x in elements {
            self.check(x)?;
            local[x] = b.add_element(self.annotations[x].clone());
            b.labels[local[x]] = self.labels[x];
        }
        for rel in 0..self.vocab.len() {
            for t in &self.tuples[rel] {
                if t.iter().all(|&x| local[x] != usize::MAX) {
                    let mapped: Vec<usize> = t.iter().map(|&x| local[x]).collect();
                    b.add_tuple_idx(rel, &mapped)?;
                }
            }
        }
        b.build()
    }

    /// Same relations, annotations dropped.
    pub fn without_annotations(&self) -> Structure {
        let mut s = self.clone();
        s.annotations = vec![Annotation::plain(); self.len()];
        s
    }
}

#[derive(Clone, Debug)]
pub struct StructureBuilder {
    vocab: Vocabulary,
    labels: Vec<u128>,
    tuples: Vec<BTreeSet<Vec<usize>>>,
    annotations: Vec<Annotation>,
}

impl StructureBuilder {
    pub fn new(vocab: Vocabulary) -> Self {
        let tuples = vec![BTreeSet::new(); vocab.len()];
        Self { vocab, labels: Vec::new(), tuples, annotations: Vec::new() }
    }

    pub fn colored_graph() -> Self {
        Self::new(Vocabulary::colored_graph())
    }

    pub fn from_structure(s: &Structure) -> Self {
        Self {
            vocab: s.vocab.clone(),
            labels: s.labels.clone(),
            tuples: s.tuples.iter().map(|ts| ts.iter().cloned().collect()).collect(),
            annotations: s.annotations.clone(),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn add_element(&mut self, annotation: Annotation) -> usize {
        self.labels.push(0);
        self.annotations.push(annotation);
        self.labels.len() - 1
    }

    pub fn add_plain(&mut self) -> usize {
        self.add_element(Annotation::plain())
    }

    pub fn add_elements(&mut self, n: usize) -> std::ops::Range<usize> {
        let start = self.len();
        for _ in 0..n {
            self.add_plain();
        }
        start..self.len()
    }

    pub fn set_annotation(&mut self, x: usize, annotation: Annotation) {
        self.annotations[x] = annotation;
    }

    pub fn annotation(&self, x: usize) -> &Annotation {
        &self.annotations[x]
    }

    pub fn set_label(&mut self, x: usize, rel: &str) -> Result<()> {
        let r = self.vocab.lookup(rel)?;
        self.add_tuple_idx(r, &[x])
    }

    pub fn set_labels_raw(&mut self, x: usize, labels: u128) {
        self.labels[x] = labels;
    }

    pub fn add_tuple(&mut self, rel: &str, tuple: &[usize]) -> Result<()> {
        let r = self.vocab.lookup(rel)?;
        self.add_tuple_idx(r, tuple)
    }

    pub fn add_edge(&mut self, x: usize, y: usize) -> Result<()> {
        self.add_tuple(EDGE, &[x, y])
    }

    /// Connects `x` and `y` by a path with `length` edges; returns the
    /// `length - 1` internal elements.
    pub fn add_path(&mut self, x: usize, y: usize, length: usize) -> Result<Vec<usize>> {
        if length == 0 {
            return Err(Error::Parameter("path of length 0".into()));
        }
        let internal: Vec<usize> = (1..length).map(|_| self.add_plain()).collect();
        let mut prev = x;
        for &v in internal.iter().chain(std::iter::once(&y)) {
            self.add_edge(prev, v)?;
            prev = v;
        }
        Ok(internal)
    }

    pub fn add_tuple_idx(&mut self, rel: usize, tuple: &[usize]) -> Result<()> {
        let sym = self.vocab.relations.get(rel).ok_or_else(|| {
            Error::InvalidStructure(format!("relation index {rel} out of range"))
        })?;
        if tuple.len() != sym.arity {
            return Err(Error::InvalidStructure(format!(
                "tuple of length {} for `{}` of arity {}",
                tuple.len(),
                sym.name,
                sym.arity
            )));
        }
        if let Some(&bad) = tuple.iter().find(|&&x| x >= self.labels.len()) {
            return Err(Error::UnknownElement(bad));
        }
        if sym.arity == 1 {
            self.labels[tuple[0]] |= 1u128 << rel;
        } else if sym.symmetric {
            let (a, b) = (tuple[0].min(tuple[1]), tuple[0].max(tuple[1]));
            self.tuples[rel].insert(vec![a, b]);
        } else {
            self.tuples[rel].insert(tuple.to_vec());
        }
        Ok(())
    }

    pub fn build(self) -> Result<Structure> {
        let n = self.labels.len();
        if let Some((p0, p1)) = self.vocab.exclusive_colors() {
            let both = (1u128 << p0) | (1u128 << p1);
            if let Some(x) = self.labels.iter().position(|&l| l & both == both) {
                return Err(Error::InvalidStructure(format!("element {x} carries both P0 and P1")));
            }
        }
        let rels = self.vocab.len();
        let mut gaifman: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut out_adj = vec![Vec::new(); rels];
        let mut in_adj = vec![Vec::new(); rels];
        let mut incidence = vec![Vec::new(); n];
        let tuples: Vec<Vec<Vec<usize>>> =
            self.tuples.into_iter().map(|ts| ts.into_iter().collect()).collect();
        for rel in 0..rels {
            let arity = self.vocab.arity(rel);
            if arity == 2 {
                let mut out = vec![Vec::new(); n];
                let mut inn = vec![Vec::new(); n];
                for t in &tuples[rel] {
                    let (a, b) = (t[0], t[1]);
                    out[a].push(b);
                    inn[b].push(a);
                    if self.vocab.is_symmetric(rel) && a != b {
                        out[b].push(a);
                        inn[a].push(b);
                    }
                }
                for v in out.iter_mut().chain(inn.iter_mut()) {
                    v.sort_unstable();
                    v.dedup();
                }
                out_adj[rel] = out;
                in_adj[rel] = inn;
            } else if arity >= 3 {
                for (i, t) in tuples[rel].iter().enumerate() {
                    let mut seen = BTreeSet::new();
                    for &x in t {
                        if seen.insert(x) {
                            incidence[x].push((rel, i));
                        }
                    }
                }
            }
            for t in &tuples[rel] {
                for &a in t {
                    for &b in t {
                        if a != b {
                            gaifman[a].insert(b);
                        }
                    }
                }
            }
        }
        Ok(Structure {
            vocab: self.vocab,
            labels: self.labels,
            tuples,
            annotations: self.annotations,
            gaifman: gaifman.into_iter().map(|s| s.into_iter().collect()).collect(),
            out_adj,
            in_adj,
            incidence,
        })
    }
}

/// Undirected path on `n` elements `0 - 1 - ... - n-1`.
pub fn path_graph(n: usize) -> Structure {
    let mut b = StructureBuilder::colored_graph();
    b.add_elements(n);
    for i in 1..n {
        b.add_edge(i - 1, i).expect("valid ids");
    }
    b.build().expect("path is valid")
}

/// Cycle on `n ≥ 3` elements.
pub fn cycle_graph(n: usize) -> Structure {
    let mut b = StructureBuilder::colored_graph();
    b.add_elements(n);
    for i in 0..n {
        b.add_edge(i, (i + 1) % n).expect("valid ids");
    }
    b.build().expect("cycle is valid")
}

/// Strict linear order on `n` elements over [`Vocabulary::linear_order`].
pub fn linear_order(n: usize) -> Structure {
    let mut b = StructureBuilder::new(Vocabulary::linear_order());
    b.add_elements(n);
    for i in 0..n {
        for j in i + 1..n {
            b.add_tuple(LESS, &[i, j]).expect("valid ids");
        }
    }
    b.build().expect("order is valid")
}
