//! Ehrenfeucht-Fraisse games.
//!
//! `ef_equivalent(a, b, r)` decides whether Duplicator survives `r` rounds,
//! i.e. whether `a` and `b` agree on every first-order sentence of quantifier
//! rank at most `r`.
//!
//! Memo soundness: the value of a position depends only on the set of picked
//! pairs and the rounds left, so the key `(rounds_left, sorted pairs)` never
//! conflates positions with different values.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use crate::structure::Structure;
use crate::{Error, Result};

/// Resource caps for one game search. `None` means unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_seconds: Option<f64>,
}

impl Budget {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn nodes(n: u64) -> Self {
        Self { max_nodes: Some(n), max_seconds: None }
    }

    pub fn seconds(s: f64) -> Self {
        Self { max_nodes: None, max_seconds: Some(s) }
    }
}

/// Result of [`distinguishing_rank`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank {
    /// Least rank at which some sentence separates the structures.
    Distinguished(usize),
    /// Equivalent at every rank up to the searched maximum.
    Indistinguishable { up_to: usize },
}

fn check_ids(s: &Structure, ids: impl IntoIterator<Item = usize>) -> Result<()> {
    for x in ids {
        if x >= s.len() {
            return Err(Error::UnknownElement(x));
        }
    }
    Ok(())
}

/// Whether `pairs` induce an injective map preserving and reflecting every relation.
pub fn is_partial_isomorphism(a: &Structure, b: &Structure, pairs: &[(usize, usize)]) -> Result<bool> {
    if a.vocab() != b.vocab() {
        return Err(Error::VocabularyMismatch);
    }
    check_ids(a, pairs.iter().map(|p| p.0))?;
    check_ids(b, pairs.iter().map(|p| p.1))?;
    let game = Game::new(a, b, Budget::unbounded());
    let mut picked = Vec::new();
    for &(x, y) in pairs {
        if !game.extends(&picked, x, y) {
            return Ok(false);
        }
        picked.push((x, y));
    }
    Ok(true)
}

pub fn ef_equivalent(a: &Structure, b: &Structure, rounds: usize) -> Result<bool> {
    ef_equivalent_with(a, b, rounds, Budget::unbounded())
}

pub fn ef_equivalent_with(a: &Structure, b: &Structure, rounds: usize, budget: Budget) -> Result<bool> {
    if a.vocab() != b.vocab() {
        return Err(Error::VocabularyMismatch);
    }
    let mut game = Game::new(a, b, budget);
    game.wins(&mut Vec::new(), rounds)
}

/// Least rank in `0..=max_rank` separating the structures.
pub fn distinguishing_rank(a: &Structure, b: &Structure, max_rank: usize, budget: Budget) -> Result<Rank> {
    for r in 1..=max_rank {
        if !ef_equivalent_with(a, b, r, budget)? {
            return Ok(Rank::Distinguished(r));
        }
    }
    Ok(Rank::Indistinguishable { up_to: max_rank })
}

/// Partition into classes whose transpositions are automorphisms.
fn twin_classes(s: &Structure) -> Vec<usize> {
    let n = s.len();
    let mut rep: Vec<usize> = (0..n).collect();
    if !s.vocab().has_only_small_arities() {
        return rep;
    }
    let binary: Vec<usize> = (0..s.vocab().len()).filter(|&r| s.vocab().arity(r) == 2).collect();
    let mut buckets: HashMap<(u128, usize), Vec<usize>> = HashMap::new();
    for x in 0..n {
        buckets.entry((s.labels(x), s.neighbors(x).len())).or_default().push(x);
    }
    let strip = |v: &[usize], x: usize, y: usize| -> Vec<usize> {
        v.iter().copied().filter(|&z| z != x && z != y).collect()
    };
    let swappable = |x: usize, y: usize| {
        binary.iter().all(|&r| {
            s.holds_binary(r, x, x) == s.holds_binary(r, y, y)
                && s.holds_binary(r, x, y) == s.holds_binary(r, y, x)
                && strip(s.out_neighbors(r, x), x, y) == strip(s.out_neighbors(r, y), x, y)
                && strip(s.in_neighbors(r, x), x, y) == strip(s.in_neighbors(r, y), x, y)
        })
    };
    let mut keys: Vec<&(u128, usize)> = buckets.keys().collect();
    keys.sort();
    for key in keys {
        let members = &buckets[key];
        let mut reps: Vec<usize> = Vec::new();
        for &x in members {
            match reps.iter().find(|&&r| swappable(r, x)) {
                Some(&r) => rep[x] = r,
                None => reps.push(x),
            }
        }
    }
    rep
}

struct Game<'a> {
    a: &'a Structure,
    b: &'a Structure,
    twins_a: Vec<usize>,
    twins_b: Vec<usize>,
    binary: Vec<usize>,
    higher: Vec<usize>,
    memo: HashMap<(usize, Vec<(usize, usize)>), bool>,
    explored: u64,
    budget: Budget,
    deadline: Option<Instant>,
}

impl<'a> Game<'a> {
    fn new(a: &'a Structure, b: &'a Structure, budget: Budget) -> Self {
        let vocab = a.vocab();
        Self {
            a,
            b,
            twins_a: twin_classes(a),
            twins_b: twin_classes(b),
            binary: (0..vocab.len()).filter(|&r| vocab.arity(r) == 2).collect(),
            higher: (0..vocab.len()).filter(|&r| vocab.arity(r) >= 3).collect(),
            memo: HashMap::new(),
            explored: 0,
            budget,
            deadline: budget.max_seconds.map(|s| Instant::now() + Duration::from_secs_f64(s)),
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.explored += 1;
        let over_nodes = self.budget.max_nodes.is_some_and(|m| self.explored > m);
        let over_time =
            self.explored.is_multiple_of(256) && self.deadline.is_some_and(|d| Instant::now() > d);
        if over_nodes || over_time {
            return Err(Error::BudgetExceeded { explored: self.explored });
        }
        Ok(())
    }

    /// Whether adding `(x, y)` to a partial isomorphism keeps it one.
    fn extends(&self, picked: &[(usize, usize)], x: usize, y: usize) -> bool {
        let (a, b) = (self.a, self.b);
        if a.labels(x) != b.labels(y) {
            return false;
        }
        for &r in &self.binary {
            if a.holds_binary(r, x, x) != b.holds_binary(r, y, y) {
                return false;
            }
        }
        for &(px, py) in picked {
            if (px == x) != (py == y) {
                return false;
            }
            for &r in &self.binary {
                if a.holds_binary(r, x, px) != b.holds_binary(r, y, py)
                    || a.holds_binary(r, px, x) != b.holds_binary(r, py, y)
                {
                    return false;
                }
            }
        }
        if self.higher.is_empty() {
            return true;
        }
        let mut all: Vec<(usize, usize)> = picked.to_vec();
        all.push((x, y));
        self.higher_tuples_agree(&all, all.len() - 1)
    }

    /// Tuples of arity ≥ 3 over picked elements that use position `new`.
    fn higher_tuples_agree(&self, all: &[(usize, usize)], new: usize) -> bool {
        for &r in &self.higher {
            let arity = self.a.vocab().arity(r);
            let m = all.len();
            let mut idx = vec![0usize; arity];
            loop {
                if idx.contains(&new) {
                    let ta: Vec<usize> = idx.iter().map(|&i| all[i].0).collect();
                    let tb: Vec<usize> = idx.iter().map(|&i| all[i].1).collect();
                    if self.a.holds(r, &ta) != self.b.holds(r, &tb) {
                        return false;
                    }
                }
                let mut pos = 0;
                while pos < arity {
                    idx[pos] += 1;
                    if idx[pos] < m {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == arity {
                    break;
                }
            }
        }
        true
    }

    /// Atomic type of `x` relative to the picked elements of one side.
    fn one_type(s: &Structure, binary: &[usize], picked: &[usize], x: usize) -> Vec<u64> {
        let mut key = Vec::with_capacity(2 + picked.len() * (1 + 2 * binary.len()));
        key.push(s.labels(x) as u64);
        key.push((s.labels(x) >> 64) as u64);
        for &r in binary {
            key.push(s.holds_binary(r, x, x) as u64);
        }
        for &p in picked {
            key.push((p == x) as u64);
            for &r in binary {
                key.push(s.holds_binary(r, x, p) as u64 | (s.holds_binary(r, p, x) as u64) << 1);
            }
        }
        key
    }

    /// Exact value with one round left.
    fn last_round(&mut self, picked: &[(usize, usize)]) -> Result<bool> {
        self.tick()?;
        if self.higher.is_empty() {
            let pa: Vec<usize> = picked.iter().map(|p| p.0).collect();
            let pb: Vec<usize> = picked.iter().map(|p| p.1).collect();
            let ta: BTreeSet<Vec<u64>> =
                self.a.elements().map(|x| Self::one_type(self.a, &self.binary, &pa, x)).collect();
            let tb: BTreeSet<Vec<u64>> =
                self.b.elements().map(|y| Self::one_type(self.b, &self.binary, &pb, y)).collect();
            return Ok(ta == tb);
        }
        let forth = self.a.elements().all(|x| self.b.elements().any(|y| self.extends(picked, x, y)));
        let back = self.b.elements().all(|y| self.a.elements().any(|x| self.extends(picked, x, y)));
        Ok(forth && back)
    }

    /// Spoiler candidates on one side: unpicked twin-class representatives.
    fn candidates(twins: &[usize], picked: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        (0..twins.len()).filter(|&x| !picked(x) && seen.insert(twins[x])).collect()
    }

    fn wins(&mut self, picked: &mut Vec<(usize, usize)>, rounds: usize) -> Result<bool> {
        if rounds == 0 {
            return Ok(true);
        }
        let mut key_pairs = picked.clone();
        key_pairs.sort_unstable();
        let key = (rounds, key_pairs);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let value = if rounds == 1 { self.last_round(picked)? } else { self.search(picked, rounds)? };
        self.memo.insert(key, value);
        Ok(value)
    }

    fn search(&mut self, picked: &mut Vec<(usize, usize)>, rounds: usize) -> Result<bool> {
        self.tick()?;
        let picked_a: BTreeSet<usize> = picked.iter().map(|p| p.0).collect();
        let picked_b: BTreeSet<usize> = picked.iter().map(|p| p.1).collect();
        let moves_a = Self::candidates(&self.twins_a, |x| picked_a.contains(&x));
        let moves_b = Self::candidates(&self.twins_b, |y| picked_b.contains(&y));
        for &x in &moves_a {
            if !self.reply(picked, rounds, &moves_b, |y| (x, y))? {
                return Ok(false);
            }
        }
        for &y in &moves_b {
            if !self.reply(picked, rounds, &moves_a, |x| (x, y))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether Duplicator has a winning answer among `replies`.
    fn reply(
        &mut self,
        picked: &mut Vec<(usize, usize)>,
        rounds: usize,
        replies: &[usize],
        pair: impl Fn(usize) -> (usize, usize),
    ) -> Result<bool> {
        for &r in replies {
            let (x, y) = pair(r);
            if !self.extends(picked, x, y) {
                continue;
            }
            picked.push((x, y));
            let ok = self.wins(picked, rounds - 1);
            picked.pop();
            if ok? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{cycle_graph, linear_order, path_graph, StructureBuilder, P0, P1};

    fn point(color: &str) -> Structure {
        let mut b = StructureBuilder::colored_graph();
        let x = b.add_plain();
        b.set_label(x, color).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn partial_isomorphism_basics() {
        let e = path_graph(2);
        let two = Structure::empty(e.vocab().clone())
            .disjoint_union(&point(P0))
            .unwrap();
        assert!(is_partial_isomorphism(&e, &two, &[]).unwrap());
        let non_edge = {
            let mut b = StructureBuilder::colored_graph();
            b.add_elements(2);
            b.build().unwrap()
        };
        assert!(!is_partial_isomorphism(&e, &non_edge, &[(0, 0), (1, 1)]).unwrap());
        assert!(!is_partial_isomorphism(&point(P0), &point(P1), &[(0, 0)]).unwrap());
        assert!(!is_partial_isomorphism(&e, &non_edge, &[(0, 0), (1, 0)]).unwrap());
        assert!(is_partial_isomorphism(&e, &e, &[(9, 0)]).is_err());
    }

    #[test]
    fn identity_and_small_orders() {
        let c = cycle_graph(5);
        for r in 0..4 {
            assert!(ef_equivalent(&c, &c, r).unwrap());
        }
        assert!(ef_equivalent(&linear_order(3), &linear_order(4), 2).unwrap());
        assert!(!ef_equivalent(&linear_order(2), &linear_order(3), 2).unwrap());
    }

    #[test]
    fn ranks() {
        let c = cycle_graph(4);
        assert_eq!(distinguishing_rank(&c, &c, 5, Budget::unbounded()).unwrap(), Rank::Indistinguishable {
            up_to: 5
        });
        assert_eq!(
            distinguishing_rank(&linear_order(2), &linear_order(3), 3, Budget::unbounded()).unwrap(),
            Rank::Distinguished(2)
        );
        assert_eq!(
            distinguishing_rank(&point(P0), &point(P1), 3, Budget::unbounded()).unwrap(),
            Rank::Distinguished(1)
        );
    }

    #[test]
    fn budget_is_distinct_from_false() {
        let r = ef_equivalent_with(&linear_order(8), &linear_order(9), 3, Budget::nodes(3));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn twins_are_automorphic() {
        // Star centre 0 with leaves 1..4: all leaves are twins.
        let mut b = StructureBuilder::colored_graph();
        b.add_elements(5);
        for y in 1..5 {
            b.add_edge(0, y).unwrap();
        }
        let star = b.build().unwrap();
        assert_eq!(twin_classes(&star), vec![0, 1, 1, 1, 1]);
        // Adjacent vertices of K3 are true twins.
        assert_eq!(twin_classes(&cycle_graph(3)), vec![0, 0, 0]);
        assert_eq!(twin_classes(&path_graph(3)), vec![0, 1, 0]);
    }
}
