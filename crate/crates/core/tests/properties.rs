mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force_isomorphic, permuted, random_colored_graph, TypeOracle};
use spandec::decomp::{encode_classical, ext, span, validate_td, width, ClassicalDecomposition, TreeMetric};
use spandec::ef::ef_equivalent;
use spandec::falsifier::{check_lemma1, enumerate_decompositions, SearchConfig};
use spandec::gadgets::{build_pw_g, build_pw_h, make_bicolit, PwParams};
use spandec::io::DecompositionFile;
use spandec::structure::{are_isomorphic, path_graph, DEFAULT_ISO_BUDGET};
use spandec::Structure;

fn graph(seed: u64, n: usize, density: f64) -> Structure {
    random_colored_graph(&mut ChaCha8Rng::seed_from_u64(seed), n, density)
}

fn shuffle(seed: u64, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

/// Random tree on `t` nodes given as a parent array with `parent[i] < i`.
fn random_tree(seed: u64, t: usize) -> Vec<Option<usize>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t).map(|i| (i > 0).then(|| rng.gen_range(0..i))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ef_agrees_with_type_oracle(s1 in any::<u64>(), s2 in any::<u64>(), n1 in 1usize..6, n2 in 1usize..6, r in 0usize..3) {
        let (a, b) = (graph(s1, n1, 0.4), graph(s2, n2, 0.4));
        let mut oracle = TypeOracle::default();
        prop_assert_eq!(ef_equivalent(&a, &b, r).unwrap(), oracle.equivalent(&a, &b, r));
    }

    #[test]
    fn ef_is_symmetric_and_monotone(s1 in any::<u64>(), s2 in any::<u64>(), n in 1usize..7, r in 0usize..3) {
        let (a, b) = (graph(s1, n, 0.35), graph(s2, n, 0.35));
        let ab = ef_equivalent(&a, &b, r + 1).unwrap();
        prop_assert_eq!(ab, ef_equivalent(&b, &a, r + 1).unwrap());
        if ab {
            prop_assert!(ef_equivalent(&a, &b, r).unwrap());
        }
    }

    #[test]
    fn isomorphic_copies_are_equivalent(seed in any::<u64>(), n in 1usize..8, r in 0usize..4) {
        let a = graph(seed, n, 0.3);
        let b = permuted(&a, &shuffle(seed ^ 1, n));
        prop_assert!(ef_equivalent(&a, &b, r).unwrap());
    }

    #[test]
    fn iso_matches_brute_force(s1 in any::<u64>(), s2 in any::<u64>(), n in 1usize..8, copy in any::<bool>()) {
        let a = graph(s1, n, 0.4);
        let b = if copy { permuted(&a, &shuffle(s2, n)) } else { graph(s2, n, 0.4) };
        let found = are_isomorphic(&a, &b, DEFAULT_ISO_BUDGET).unwrap();
        prop_assert_eq!(found.is_some(), brute_force_isomorphic(&a, &b));
    }

    #[test]
    fn tree_metric_is_a_metric(seed in any::<u64>(), t in 1usize..25) {
        let parent = random_tree(seed, t);
        let s = path_graph(1);
        let d = ClassicalDecomposition::new(parent, vec![vec![0]; t]);
        let td = encode_classical(&s, &d, 0).unwrap();
        let m = TreeMetric::new(&td).unwrap();
        for a in 0..t {
            prop_assert_eq!(m.distance(a, a), 0);
            for b in 0..t {
                prop_assert_eq!(m.distance(a, b), m.distance(b, a));
                if a != b {
                    prop_assert!(m.distance(a, b) >= 1);
                }
                for c in 0..t {
                    prop_assert!(m.distance(a, c) <= m.distance(a, b) + m.distance(b, c));
                }
            }
        }
        prop_assert_eq!(span(&td).unwrap(), m.diameter(&(0..t).collect::<Vec<_>>()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every enumerated decomposition passes the validity checks, the width
    /// and span caps, brute-force isomorphism of `ext`, the distance bound,
    /// and a JSON round trip.
    #[test]
    fn enumerated_decompositions_are_valid(seed in any::<u64>(), n in 1usize..6, k in 1usize..3, delta in 1usize..3) {
        let s = graph(seed, n, 0.35);
        let cfg = SearchConfig::new(k, delta).max_tree_nodes(4);
        let e = enumerate_decompositions(&s, &cfg).unwrap();
        prop_assert!(e.complete);
        for td in &e.decompositions {
            prop_assert!(validate_td(td).is_ok());
            prop_assert!(width(td) <= k);
            prop_assert!(span(td).unwrap() <= delta);
            prop_assert!(brute_force_isomorphic(&ext(td).unwrap().0, &s));
            prop_assert_eq!(check_lemma1(td, delta).unwrap(), None);
            let text = DecompositionFile::render(td).unwrap();
            prop_assert_eq!(DecompositionFile::render(&DecompositionFile::parse(&text).unwrap()).unwrap(), text);
        }
    }

    /// Relabelling the structure does not change which decompositions exist.
    #[test]
    fn enumeration_is_invariant_under_relabelling(seed in any::<u64>(), n in 1usize..6) {
        let a = graph(seed, n, 0.35);
        let b = permuted(&a, &shuffle(seed ^ 7, n));
        let cfg = SearchConfig::new(1, 2).max_tree_nodes(4);
        let ea = enumerate_decompositions(&a, &cfg).unwrap();
        let eb = enumerate_decompositions(&b, &cfg).unwrap();
        prop_assert_eq!(ea.decompositions.len(), eb.decompositions.len());
    }
}

#[test]
fn rank_two_gadget_verdicts_match_type_oracle() {
    let p = PwParams::micro();
    let bicolit = |n1, n2| make_bicolit(p.beta, p.p, p.n, n1, n2, p.m).unwrap();
    let x = bicolit(0, 1).disjoint_union(&bicolit(0, 1)).unwrap();
    let y = bicolit(0, 0).disjoint_union(&bicolit(1, 1)).unwrap();
    let (g, h) = (build_pw_g(&p).unwrap(), build_pw_h(&p).unwrap());
    let mut oracle = TypeOracle::default();
    for (a, b) in [(&x, &y), (&g, &h)] {
        for r in 1..=2 {
            assert_eq!(ef_equivalent(a, b, r).unwrap(), oracle.equivalent(a, b, r));
        }
    }
}
