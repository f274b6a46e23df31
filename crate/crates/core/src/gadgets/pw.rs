//! Pathwidth gadgets: `Gadget`, `Bicol`, `Bicolit` and the pair `G`, `H`.
//!
//! A gadget joins `s` to `t` by a top and a bottom path. Each path is
//! `2^β - 1` buffer nodes, a run of `pn` nodes and another `2^β - 1` buffer
//! nodes. In a `Bicol` the top run is coloured `(0^{n-n1} 1^{n1})^p` and the
//! bottom run `(0^{n-n2} 1^{n2})^p`, with `P0` for 0 and `P1` for 1.

use std::collections::BTreeMap;

use super::plan::PwPlan;
use crate::decomp::{encode_classical, ClassicalDecomposition, TreeDecomposition};
use crate::structure::{Annotation, Role, Side, Structure, StructureBuilder, P0, P1};
use crate::{Error, Result};

/// Shape parameters; a plan supplies conforming values, tests pass micro ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PwParams {
    pub beta: u32,
    pub p: usize,
    pub n: usize,
    pub m: usize,
    pub l: usize,
}

impl PwParams {
    /// The test-scale instance: `p = 1, m = 2, β = 1, n = 3, l = 1`.
    pub fn micro() -> Self {
        Self { beta: 1, p: 1, n: 3, m: 2, l: 1 }
    }

    pub fn from_plan(plan: &PwPlan) -> Result<Self> {
        let conv = |v: u64, what: &str| {
            usize::try_from(v).map_err(|_| Error::Parameter(format!("{what} = {v} is too large")))
        };
        Ok(Self {
            beta: u32::try_from(plan.beta).map_err(|_| Error::Parameter("beta too large".into()))?,
            p: conv(plan.p, "p")?,
            n: conv(plan.n, "n")?,
            m: conv(plan.m, "m")?,
            l: conv(plan.l, "l")?,
        })
    }

    fn buffer(&self) -> usize {
        (1usize << self.beta) - 1
    }

    /// `2^{β+2} + 2pn - 2`.
    pub fn gadget_size(&self) -> usize {
        (1usize << (self.beta + 2)) + 2 * self.p * self.n - 2
    }

    /// `m(2^{β+2} + 2pn - 2) - (m - 1)`.
    pub fn bicolit_size(&self) -> usize {
        self.m * self.gadget_size() - (self.m - 1)
    }
}

fn run_colour(j: usize, n: usize, ones: usize) -> &'static str {
    if j % n >= n - ones {
        P1
    } else {
        P0
    }
}

/// Adds the two internal paths of one gadget between existing `s` and `t`.
fn add_gadget(
    b: &mut StructureBuilder,
    s: usize,
    t: usize,
    params: &PwParams,
    colours: Option<(usize, usize)>,
    block: usize,
    gadget: usize,
) -> Result<()> {
    let run = params.p * params.n;
    for side in [Side::Top, Side::Bottom] {
        let ones = colours.map(|(n1, n2)| if side == Side::Top { n1 } else { n2 });
        let mut prev = s;
        let total = 2 * params.buffer() + run;
        for i in 0..total {
            let x = if (params.buffer()..params.buffer() + run).contains(&i) {
                let j = i - params.buffer();
                let x = b.add_element(Annotation::role(Role::RunMember {
                    block,
                    gadget,
                    side,
                    run_value: ones,
                }));
                if let Some(ones) = ones {
                    b.set_label(x, run_colour(j, params.n, ones))?;
                }
                x
            } else {
                b.add_plain()
            };
            b.add_edge(prev, x)?;
            prev = x;
        }
        b.add_edge(prev, t)?;
    }
    Ok(())
}

fn check_shape(params: &PwParams) -> Result<()> {
    if params.p == 0 || params.n == 0 {
        return Err(Error::Parameter("p and n must be at least 1".into()));
    }
    if params.beta > 20 {
        return Err(Error::Parameter("beta above 20 exceeds the generation cap".into()));
    }
    Ok(())
}

/// Uncoloured gadget; `s` and `t` are elements 0 and 1.
pub fn make_gadget(beta: u32, p: usize, n: usize) -> Result<Structure> {
    let params = PwParams { beta, p, n, m: 1, l: 1 };
    check_shape(&params)?;
    let mut b = StructureBuilder::colored_graph();
    let s = b.add_element(Annotation::role(Role::SourceS));
    let t = b.add_element(Annotation::role(Role::SourceT));
    add_gadget(&mut b, s, t, &params, None, 0, 0)?;
    b.build()
}

/// Adds `m` coloured gadgets sharing joints; returns the joints `s_0..s_m`.
fn add_bicolit(
    b: &mut StructureBuilder,
    params: &PwParams,
    n1: usize,
    n2: usize,
    block: usize,
) -> Result<Vec<usize>> {
    if n1 > params.n || n2 > params.n {
        return Err(Error::Parameter(format!("run values ({n1}, {n2}) exceed n = {}", params.n)));
    }
    if params.m == 0 {
        return Err(Error::Parameter("m must be at least 1".into()));
    }
    let joints: Vec<usize> = (0..=params.m)
        .map(|index| b.add_element(Annotation::role(Role::Joint { block, index })))
        .collect();
    for g in 0..params.m {
        add_gadget(b, joints[g], joints[g + 1], params, Some((n1, n2)), block, g)?;
    }
    Ok(joints)
}

pub fn make_bicol(beta: u32, p: usize, n: usize, n1: usize, n2: usize) -> Result<Structure> {
    make_bicolit(beta, p, n, n1, n2, 1)
}

pub fn make_bicolit(beta: u32, p: usize, n: usize, n1: usize, n2: usize, m: usize) -> Result<Structure> {
    let params = PwParams { beta, p, n, m, l: 1 };
    check_shape(&params)?;
    let mut b = StructureBuilder::colored_graph();
    add_bicolit(&mut b, &params, n1, n2, 0)?;
    b.build()
}

/// Blocks in order, paired by length-`l` paths, pairs joined by single edges.
fn build_chain(params: &PwParams, blocks: &[(usize, usize)]) -> Result<Structure> {
    check_shape(params)?;
    if params.l == 0 {
        return Err(Error::Parameter("l must be at least 1".into()));
    }
    if params.n.is_multiple_of(2) {
        return Err(Error::Parameter(format!("n = {} must be odd", params.n)));
    }
    let mut b = StructureBuilder::colored_graph();
    let mut ends: Vec<(usize, usize)> = Vec::new();
    for (block, &(n1, n2)) in blocks.iter().enumerate() {
        let joints = add_bicolit(&mut b, params, n1, n2, block)?;
        ends.push((joints[0], joints[params.m]));
    }
    for i in 1..ends.len() {
        let (from, to) = (ends[i - 1].1, ends[i].0);
        let within_pair = i % 2 == 1;
        b.add_path(from, to, if within_pair { params.l } else { 1 })?;
    }
    b.build()
}

/// Two copies of `Bicolit(2i, 2i+1)` for each `i` in `0..=(n-1)/2`.
pub fn build_pw_g(params: &PwParams) -> Result<Structure> {
    let blocks: Vec<(usize, usize)> =
        (0..=(params.n.saturating_sub(1)) / 2).flat_map(|i| [(2 * i, 2 * i + 1); 2]).collect();
    build_chain(params, &blocks)
}

/// `Bicolit(j, j)` for each `j` in `0..=n`.
pub fn build_pw_h(params: &PwParams) -> Result<Structure> {
    let blocks: Vec<(usize, usize)> = (0..=params.n).map(|j| (j, j)).collect();
    build_chain(params, &blocks)
}

/// `(top, bottom)` run values of every block, read from annotations.
pub fn block_values(s: &Structure) -> Vec<(usize, usize)> {
    let mut values: BTreeMap<usize, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for a in s.annotations() {
        if let Role::RunMember { block, side, run_value: Some(v), .. } = a.role {
            let e = values.entry(block).or_default();
            match side {
                Side::Top => e.0 = Some(v),
                Side::Bottom => e.1 = Some(v),
            }
        }
    }
    values.into_values().filter_map(|(t, b)| Some((t?, b?))).collect()
}

fn joint_key(role: &Role) -> Option<(usize, usize)> {
    match *role {
        Role::Joint { block, index } => Some((block, index)),
        Role::SourceS => Some((0, 0)),
        Role::SourceT => Some((0, 1)),
        _ => None,
    }
}

/// Walks from joint `u` through `first` until the next joint.
fn trace(s: &Structure, is_joint: &[bool], u: usize, first: usize) -> Result<(Vec<usize>, usize)> {
    let mut path = Vec::new();
    let (mut prev, mut cur) = (u, first);
    while !is_joint[cur] {
        path.push(cur);
        let next = s.neighbors(cur).iter().copied().find(|&y| y != prev);
        match (s.neighbors(cur).len(), next) {
            (2, Some(next)) => {
                prev = cur;
                cur = next;
            }
            _ => {
                return Err(Error::MissingAnnotations(format!(
                    "element {cur} on a path from joint {u} has degree {}",
                    s.neighbors(cur).len()
                )))
            }
        }
    }
    Ok((path, cur))
}

fn side_of(s: &Structure, path: &[usize]) -> Option<Side> {
    path.iter().find_map(|&x| match s.annotation(x).role {
        Role::RunMember { side, .. } => Some(side),
        _ => None,
    })
}

/// Width-2 path-decomposition sweeping each gadget one top step then one
/// bottom step, and each connecting path two nodes at a time.
pub fn canonical_pd_pw(s: &Structure) -> Result<TreeDecomposition> {
    let mut joints: Vec<((usize, usize), usize)> = s
        .elements()
        .filter_map(|x| joint_key(&s.annotation(x).role).map(|k| (k, x)))
        .collect();
    joints.sort();
    if joints.len() < 2 {
        return Err(Error::MissingAnnotations("fewer than two joint annotations".into()));
    }
    let mut is_joint = vec![false; s.len()];
    for &(_, x) in &joints {
        is_joint[x] = true;
    }
    let mut bags: Vec<Vec<usize>> = Vec::new();
    for w in joints.windows(2) {
        let ((block_u, _), u) = w[0];
        let ((block_v, _), v) = w[1];
        let mut paths = Vec::new();
        for &y in s.neighbors(u) {
            let (path, end) = trace(s, &is_joint, u, y)?;
            if end == v {
                paths.push(path);
            }
        }
        if block_u == block_v {
            let [a, b] = <[Vec<usize>; 2]>::try_from(paths).map_err(|p| {
                Error::MissingAnnotations(format!("expected two gadget paths, found {}", p.len()))
            })?;
            let (top, bottom) = if side_of(s, &b) == Some(Side::Top) { (b, a) } else { (a, b) };
            if top.len() != bottom.len() || top.is_empty() {
                return Err(Error::MissingAnnotations("unbalanced gadget paths".into()));
            }
            let len = top.len();
            bags.push(vec![u, top[0], bottom[0]]);
            for i in 0..len - 1 {
                bags.push(vec![top[i], top[i + 1], bottom[i]]);
                bags.push(vec![top[i + 1], bottom[i], bottom[i + 1]]);
            }
            bags.push(vec![top[len - 1], bottom[len - 1], v]);
        } else {
            let path = paths
                .into_iter()
                .min_by_key(Vec::len)
                .ok_or_else(|| Error::MissingAnnotations(format!("no path from joint {u} to {v}")))?;
            let nodes: Vec<usize> =
                std::iter::once(u).chain(path).chain(std::iter::once(v)).collect();
            for pair in nodes.windows(2) {
                bags.push(pair.to_vec());
            }
        }
    }
    encode_classical(s, &ClassicalDecomposition::path(bags), 2)
}
