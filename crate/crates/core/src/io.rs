//! File formats: JSON documents for structures and decompositions, PACE
//! `.gr`/`.td` import and Graphviz export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decomp::{BagElement, ClassicalDecomposition, KBag, TreeDecomposition};
use crate::structure::{RelationSymbol, EDGE, P0, P1};
use crate::{Annotation, Error, Result, Structure, StructureBuilder, Vocabulary};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: usize,
    #[serde(default)]
    pub colors: Vec<String>,
    #[serde(default, skip_serializing_if = "Annotation::is_plain")]
    pub annotation: Annotation,
}

/// JSON form of a [`Structure`]. `tuples` lists relations of arity other
/// than one; unary relations appear as node colours.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFile {
    pub vocabulary: Vec<RelationSymbol>,
    /// When set, `E` is read as symmetric regardless of its entry.
    #[serde(default)]
    pub symmetric_edges: bool,
    pub nodes: Vec<NodeEntry>,
    #[serde(default)]
    pub tuples: BTreeMap<String, Vec<Vec<usize>>>,
}

fn colour_names(vocab: &Vocabulary, labels: u128) -> Vec<String> {
    vocab
        .relations()
        .iter()
        .enumerate()
        .filter(|(r, sym)| sym.arity == 1 && labels >> r & 1 == 1)
        .map(|(_, sym)| sym.name.clone())
        .collect()
}

fn colour_mask(vocab: &Vocabulary, names: &[String]) -> Result<u128> {
    names.iter().try_fold(0u128, |m, name| {
        let r = vocab.index_of(name).ok_or_else(|| Error::UnknownRelation(name.clone()))?;
        if vocab.arity(r) != 1 {
            return Err(Error::InvalidStructure(format!("`{name}` is not unary")));
        }
        Ok(m | 1 << r)
    })
}

fn file_vocabulary(relations: &[RelationSymbol], symmetric_edges: bool) -> Result<Vocabulary> {
    let mut rels = relations.to_vec();
    if symmetric_edges {
        for r in rels.iter_mut().filter(|r| r.name == EDGE) {
            r.symmetric = true;
        }
    }
    Vocabulary::new(rels)
}

impl StructureFile {
    pub fn from_structure(s: &Structure) -> Self {
        let vocab = s.vocab();
        let nodes = s
            .elements()
            .map(|x| NodeEntry { id: x, colors: colour_names(vocab, s.labels(x)), annotation: s.annotation(x).clone() })
            .collect();
        let tuples = vocab
            .relations()
            .iter()
            .enumerate()
            .filter(|(_, sym)| sym.arity != 1)
            .map(|(r, sym)| (sym.name.clone(), s.tuples(r).to_vec()))
            .collect();
        let symmetric_edges = vocab.index_of(EDGE).is_some_and(|e| vocab.is_symmetric(e));
        StructureFile { vocabulary: vocab.relations().to_vec(), symmetric_edges, nodes, tuples }
    }

    pub fn to_structure(&self) -> Result<Structure> {
        let vocab = file_vocabulary(&self.vocabulary, self.symmetric_edges)?;
        let mut nodes: Vec<&NodeEntry> = self.nodes.iter().collect();
        nodes.sort_by_key(|n| n.id);
        if let Some((i, n)) = nodes.iter().enumerate().find(|(i, n)| n.id != *i) {
            return Err(Error::InvalidStructure(format!("node ids must be 0..{}; found {} at position {i}", nodes.len(), n.id)));
        }
        let mut b = StructureBuilder::new(vocab.clone());
        for n in &nodes {
            let x = b.add_element(n.annotation.clone());
            b.set_labels_raw(x, colour_mask(&vocab, &n.colors)?);
        }
        for (name, tuples) in &self.tuples {
            for t in tuples {
                b.add_tuple(name, t)?;
            }
        }
        b.build()
    }

    pub fn parse(text: &str) -> Result<Structure> {
        serde_json::from_str::<StructureFile>(text)?.to_structure()
    }

    /// Pretty JSON of the normalised form, newline-terminated.
    pub fn render(s: &Structure) -> Result<String> {
        let mut out = serde_json::to_string_pretty(&StructureFile::from_structure(s))?;
        out.push('\n');
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagElementEntry {
    pub local: usize,
    #[serde(default)]
    pub colors: Vec<String>,
    #[serde(default, rename = "in", skip_serializing_if = "Option::is_none")]
    pub in_mark: Option<usize>,
    #[serde(default, rename = "out", skip_serializing_if = "Option::is_none")]
    pub out_mark: Option<usize>,
    #[serde(default, skip_serializing_if = "Annotation::is_plain")]
    pub annotation: Annotation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagEntry {
    pub elements: Vec<BagElementEntry>,
    #[serde(default)]
    pub tuples: BTreeMap<String, Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNodeEntry {
    pub id: usize,
    pub parent: Option<usize>,
    pub bag: BagEntry,
}

/// JSON form of a [`TreeDecomposition`]. A missing vocabulary means the
/// coloured-graph vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<RelationSymbol>>,
    pub nodes: Vec<TreeNodeEntry>,
}

impl DecompositionFile {
    pub fn from_decomposition(td: &TreeDecomposition) -> Self {
        let vocab = &td.vocab;
        let nodes = td
            .bags
            .iter()
            .enumerate()
            .map(|(t, bag)| {
                let elements = bag
                    .elements
                    .iter()
                    .enumerate()
                    .map(|(local, e)| BagElementEntry {
                        local,
                        colors: colour_names(vocab, e.labels),
                        in_mark: e.in_mark,
                        out_mark: e.out_mark,
                        annotation: e.annotation.clone(),
                    })
                    .collect();
                let mut tuples: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
                for (r, tuple) in &bag.tuples {
                    tuples.entry(vocab.relations()[*r].name.clone()).or_default().push(tuple.clone());
                }
                TreeNodeEntry { id: t, parent: td.parent[t], bag: BagEntry { elements, tuples } }
            })
            .collect();
        let vocabulary = (*vocab != Vocabulary::colored_graph()).then(|| vocab.relations().to_vec());
        DecompositionFile { k: td.k, vocabulary, nodes }
    }

    pub fn to_decomposition(&self) -> Result<TreeDecomposition> {
        let vocab = match &self.vocabulary {
            Some(rels) => Vocabulary::new(rels.clone())?,
            None => Vocabulary::colored_graph(),
        };
        let mut nodes: Vec<&TreeNodeEntry> = self.nodes.iter().collect();
        nodes.sort_by_key(|n| n.id);
        if let Some((i, n)) = nodes.iter().enumerate().find(|(i, n)| n.id != *i) {
            return Err(Error::InvalidBag(format!("node ids must be 0..{}; found {} at position {i}", nodes.len(), n.id)));
        }
        let mut parent = Vec::with_capacity(nodes.len());
        let mut bags = Vec::with_capacity(nodes.len());
        for n in nodes {
            parent.push(n.parent);
            let mut elems: Vec<&BagElementEntry> = n.bag.elements.iter().collect();
            elems.sort_by_key(|e| e.local);
            if let Some((i, e)) = elems.iter().enumerate().find(|(i, e)| e.local != *i) {
                return Err(Error::InvalidBag(format!("node {}: local ids must be 0..{}; found {}", n.id, i, e.local)));
            }
            let mut bag = KBag::with_elements(elems.len());
            for (i, e) in elems.iter().enumerate() {
                bag.elements[i] = BagElement {
                    labels: colour_mask(&vocab, &e.colors)?,
                    in_mark: e.in_mark,
                    out_mark: e.out_mark,
                    annotation: e.annotation.clone(),
                };
            }
            for (name, tuples) in &n.bag.tuples {
                let r = vocab.index_of(name).ok_or_else(|| Error::UnknownRelation(name.clone()))?;
                for t in tuples {
                    bag.add_tuple(r, t.clone());
                }
            }
            bags.push(bag);
        }
        Ok(TreeDecomposition::new(vocab, self.k, parent, bags))
    }

    pub fn parse(text: &str) -> Result<TreeDecomposition> {
        serde_json::from_str::<DecompositionFile>(text)?.to_decomposition()
    }

    pub fn render(td: &TreeDecomposition) -> Result<String> {
        let mut out = serde_json::to_string_pretty(&DecompositionFile::from_decomposition(td))?;
        out.push('\n');
        Ok(out)
    }
}

/// Meaningful lines of a PACE file with their 1-based line numbers.
fn pace_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, w)| !w.is_empty() && w[0] != "c")
}

fn number(word: &str, line: usize) -> Result<usize> {
    word.parse().map_err(|_| Error::Parse { line, msg: format!("expected a number, found `{word}`") })
}

/// Reads a PACE `.gr` graph (`p tw n m` header, 1-based edges) as a
/// coloured graph without colours.
pub fn parse_pace_gr(text: &str) -> Result<Structure> {
    let mut lines = pace_lines(text);
    let (line, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing `p tw` header".into() })?;
    if header.len() != 4 || header[0] != "p" || header[1] != "tw" {
        return Err(Error::Parse { line, msg: "expected `p tw <n> <m>`".into() });
    }
    let (n, m) = (number(header[2], line)?, number(header[3], line)?);
    let mut b = StructureBuilder::colored_graph();
    b.add_elements(n);
    let mut count = 0;
    for (line, w) in lines {
        if w.len() != 2 {
            return Err(Error::Parse { line, msg: "expected an edge `u v`".into() });
        }
        let (u, v) = (number(w[0], line)?, number(w[1], line)?);
        if u == 0 || v == 0 || u > n || v > n {
            return Err(Error::Parse { line, msg: format!("vertex out of range 1..={n}") });
        }
        b.add_edge(u - 1, v - 1).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        count += 1;
    }
    if count != m {
        return Err(Error::Parse { line, msg: format!("header announces {m} edges, found {count}") });
    }
    b.build()
}

/// Reads a PACE `.td` solution (`s td`, `b` lines, tree edges), rooted at
/// bag 1 with 0-based vertices.
pub fn parse_pace_td(text: &str) -> Result<ClassicalDecomposition> {
    let mut lines = pace_lines(text);
    let (line, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing `s td` line".into() })?;
    if header.len() != 5 || header[0] != "s" || header[1] != "td" {
        return Err(Error::Parse { line, msg: "expected `s td <bags> <max bag size> <vertices>`".into() });
    }
    let nb = number(header[2], line)?;
    let max_size = number(header[3], line)?;
    let nv = number(header[4], line)?;
    let mut bags: Vec<Option<Vec<usize>>> = vec![None; nb];
    let mut adj = vec![Vec::new(); nb];
    let mut edges = 0;
    for (line, w) in lines {
        if w[0] == "b" {
            let i = number(w.get(1).copied().unwrap_or(""), line)?;
            if i == 0 || i > nb {
                return Err(Error::Parse { line, msg: format!("bag index out of range 1..={nb}") });
            }
            if bags[i - 1].is_some() {
                return Err(Error::Parse { line, msg: format!("bag {i} defined twice") });
            }
            let mut bag = Vec::new();
            for v in &w[2..] {
                let v = number(v, line)?;
                if v == 0 || v > nv {
                    return Err(Error::Parse { line, msg: format!("vertex out of range 1..={nv}") });
                }
                bag.push(v - 1);
            }
            if bag.len() > max_size {
                return Err(Error::Parse { line, msg: format!("bag of size {} exceeds declared {max_size}", bag.len()) });
            }
            bags[i - 1] = Some(bag);
        } else {
            if w.len() != 2 {
                return Err(Error::Parse { line, msg: "expected a tree edge `i j`".into() });
            }
            let (i, j) = (number(w[0], line)?, number(w[1], line)?);
            if i == 0 || j == 0 || i > nb || j > nb {
                return Err(Error::Parse { line, msg: format!("bag index out of range 1..={nb}") });
            }
            adj[i - 1].push(j - 1);
            adj[j - 1].push(i - 1);
            edges += 1;
        }
    }
    let bags: Vec<Vec<usize>> = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or(Error::Parse { line, msg: format!("bag {} is never defined", i + 1) }))
        .collect::<Result<_>>()?;
    if nb > 0 && edges != nb - 1 {
        return Err(Error::Parse { line, msg: format!("{nb} bags need {} tree edges, found {edges}", nb - 1) });
    }
    let mut parent = vec![None; nb];
    let mut seen = vec![false; nb];
    let mut stack: Vec<usize> = if nb > 0 { vec![0] } else { Vec::new() };
    if nb > 0 {
        seen[0] = true;
    }
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                stack.push(v);
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Parse { line, msg: format!("bag {} is not connected to bag 1", i + 1) });
    }
    Ok(ClassicalDecomposition::new(parent, bags))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: `P0` white, `P1` black, annotations as tooltips,
/// binary relations as edges (labelled unless `E`).
pub fn to_dot(s: &Structure) -> Result<String> {
    let vocab = s.vocab();
    let directed = vocab.relations().iter().any(|r| r.arity == 2 && !r.symmetric);
    let (kind, arrow) = if directed { ("digraph", "->") } else { ("graph", "--") };
    let mut out = String::new();
    let _ = writeln!(out, "{kind} structure {{");
    let _ = writeln!(out, "  node [shape=circle, style=filled, fillcolor=lightgrey];");
    let p0 = vocab.index_of(P0);
    let p1 = vocab.index_of(P1);
    for x in s.elements() {
        let mut attrs = Vec::new();
        if p1.is_some_and(|r| s.has_label(x, r)) {
            attrs.push("fillcolor=black, fontcolor=white".to_string());
        } else if p0.is_some_and(|r| s.has_label(x, r)) {
            attrs.push("fillcolor=white".to_string());
        }
        let a = s.annotation(x);
        if !a.is_plain() {
            attrs.push(format!("tooltip=\"{}\"", dot_escape(&serde_json::to_string(a)?)));
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "  {x};");
        } else {
            let _ = writeln!(out, "  {x} [{}];", attrs.join(", "));
        }
    }
    for (r, sym) in vocab.relations().iter().enumerate().filter(|(_, r)| r.arity == 2) {
        let label = if sym.name == EDGE { String::new() } else { format!(" [label=\"{}\"]", dot_escape(&sym.name)) };
        for t in s.tuples(r) {
            let _ = writeln!(out, "  {} {arrow} {}{label};", t[0], t[1]);
        }
    }
    out.push_str("}\n");
    Ok(out)
}
