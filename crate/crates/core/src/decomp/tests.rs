use super::*;
use crate::structure::{cycle_graph, is_isomorphic, path_graph, StructureBuilder, P0};

fn cg() -> Vocabulary {
    Vocabulary::colored_graph()
}

fn marked(n: usize, ins: &[(usize, usize)], outs: &[(usize, usize)]) -> KBag {
    let mut b = KBag::with_elements(n);
    for &(x, i) in ins {
        b.elements[x].in_mark = Some(i);
    }
    for &(x, i) in outs {
        b.elements[x].out_mark = Some(i);
    }
    b
}

/// Chains one element through `len` consecutive bags.
fn chained(len: usize) -> TreeDecomposition {
    let bags = (0..len)
        .map(|t| {
            let ins: Vec<(usize, usize)> = if t > 0 { vec![(0, 0)] } else { vec![] };
            let outs: Vec<(usize, usize)> = if t + 1 < len { vec![(0, 0)] } else { vec![] };
            marked(1, &ins, &outs)
        })
        .collect();
    let parent = (0..len).map(|t| t.checked_sub(1)).collect();
    TreeDecomposition::new(cg(), 1, parent, bags)
}

#[test]
fn single_colored_element_is_valid() {
    let mut bag = KBag::with_elements(1);
    bag.set_label(0, 1);
    let td = TreeDecomposition::new(cg(), 0, vec![None], vec![bag]);
    assert_eq!(validate_td(&td), Ok(()));
    assert_eq!(width(&td), 0);
    assert_eq!(span(&td).unwrap(), 0);
}

#[test]
fn root_in_mark_is_reported() {
    let td = TreeDecomposition::new(cg(), 1, vec![None], vec![marked(1, &[(0, 0)], &[])]);
    let v = validate_td(&td).unwrap_err();
    assert!(v.iter().any(|x| x.condition == Condition::RootInMark && x.index == Some(0)));
}

#[test]
fn childless_out_mark_is_reported() {
    let td = TreeDecomposition::new(cg(), 1, vec![None], vec![marked(1, &[], &[(0, 0)])]);
    let v = validate_td(&td).unwrap_err();
    assert_eq!(v.len(), 1);
    assert_eq!((v[0].node, v[0].condition, v[0].index), (0, Condition::Interface, Some(0)));
}

#[test]
fn shape_and_bag_violations() {
    let two_roots = TreeDecomposition::new(cg(), 1, vec![None, None], vec![marked(1, &[], &[]); 2]);
    assert!(validate_td(&two_roots).is_err());
    let cycle = TreeDecomposition::new(cg(), 1, vec![None, Some(2), Some(1)], vec![marked(1, &[], &[]); 3]);
    assert!(validate_td(&cycle).unwrap_err().iter().any(|v| v.condition == Condition::TreeShape));
    let big = TreeDecomposition::new(cg(), 0, vec![None], vec![KBag::with_elements(2)]);
    assert!(validate_td(&big).unwrap_err().iter().any(|v| v.condition == Condition::Bag));
    let dup = TreeDecomposition::new(cg(), 2, vec![None, Some(0)], vec![
        marked(2, &[], &[(0, 1), (1, 1)]),
        marked(1, &[(0, 1)], &[]),
    ]);
    assert!(validate_td(&dup).is_err());
    let empty = TreeDecomposition::new(cg(), 0, vec![None], vec![KBag::default()]);
    assert!(validate_td(&empty).is_err());
}

#[test]
fn ext_of_triangle_bag() {
    let mut bag = KBag::with_elements(3);
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        bag.add_tuple(0, vec![a, b]);
    }
    let td = TreeDecomposition::new(cg(), 2, vec![None], vec![bag]);
    let (s, q) = ext(&td).unwrap();
    assert!(is_isomorphic(&s, &cycle_graph(3)));
    assert_eq!(q.num_classes(), 3);
}

#[test]
fn ext_merges_across_interface() {
    // Parent {x(out 0), y}, edge x-y; child {x'(in 0), z}, edge x'-z.
    let mut parent = marked(2, &[], &[(0, 0)]);
    parent.add_tuple(0, vec![0, 1]);
    let mut child = marked(2, &[(0, 0)], &[]);
    child.add_tuple(0, vec![0, 1]);
    let td = TreeDecomposition::new(cg(), 1, vec![None, Some(0)], vec![parent, child]);
    let (s, q) = ext(&td).unwrap();
    assert!(is_isomorphic(&s, &path_graph(3)));
    assert_eq!(q.class(0, 0).unwrap(), q.class(1, 0).unwrap());
    assert_ne!(q.class(0, 1).unwrap(), q.class(1, 1).unwrap());
    assert_eq!(span(&td).unwrap(), 1);
}

#[test]
fn siblings_with_same_in_index_all_merge() {
    let td = TreeDecomposition::new(cg(), 1, vec![None, Some(0), Some(0)], vec![
        marked(1, &[], &[(0, 0)]),
        marked(1, &[(0, 0)], &[]),
        marked(1, &[(0, 0)], &[]),
    ]);
    let (s, _) = ext(&td).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(span(&td).unwrap(), 2);
}

#[test]
fn color_conflict_is_an_error() {
    let mut parent = marked(1, &[], &[(0, 0)]);
    parent.set_label(0, 1);
    let mut child = marked(1, &[(0, 0)], &[]);
    child.set_label(0, 2);
    let td = TreeDecomposition::new(cg(), 0, vec![None, Some(0)], vec![parent, child]);
    assert!(matches!(ext(&td), Err(Error::MergeConflict { class: 0 })));
}

#[test]
fn chained_element_spans_two() {
    let td = chained(3);
    assert_eq!(span(&td).unwrap(), 2);
    let (nodes, diameter) = element_occurrences(&td, 0).unwrap();
    assert_eq!(nodes, vec![0, 1, 2]);
    assert_eq!(diameter, 2);
    assert!(matches!(element_occurrences(&td, 1), Err(Error::UnknownClass(1))));
}

#[test]
fn tree_distances() {
    let td = TreeDecomposition::new(cg(), 0, vec![None, Some(0), Some(0)], vec![KBag::with_elements(1); 3]);
    assert_eq!(tree_distance(&td, 1, 1).unwrap(), 0);
    assert_eq!(tree_distance(&td, 0, 1).unwrap(), 1);
    assert_eq!(tree_distance(&td, 1, 2).unwrap(), 2);
    assert!(tree_distance(&td, 0, 5).is_err());
    assert!(!is_path_decomposition(&td));
    assert!(is_path_decomposition(&chained(4)));
}

#[test]
fn width_of_five_element_bag() {
    let td = TreeDecomposition::new(cg(), 4, vec![None], vec![KBag::with_elements(5)]);
    assert_eq!(width(&td), 4);
}

#[test]
fn encode_path_graph() {
    let p = path_graph(3);
    let d = ClassicalDecomposition::path(vec![vec![0, 1], vec![1, 2]]);
    let td = encode_classical(&p, &d, 1).unwrap();
    assert_eq!(td.bags[0].elements[1].out_mark, Some(0));
    assert_eq!(td.bags[1].elements[0].in_mark, Some(0));
    assert_eq!(span(&td).unwrap(), 1);
    assert!(is_isomorphic(&ext(&td).unwrap().0, &p));
}

#[test]
fn encode_propagates_chain_marks() {
    // Element 0 in three consecutive bags: t out:i, u in:i and out:j, v in:j.
    let mut b = StructureBuilder::colored_graph();
    b.add_elements(4);
    for y in 1..4 {
        b.add_edge(0, y).unwrap();
    }
    let star = b.build().unwrap();
    let d = ClassicalDecomposition::path(vec![vec![1, 0], vec![0, 2], vec![0, 3]]);
    let td = encode_classical(&star, &d, 1).unwrap();
    let i = td.bags[0].elements[0].out_mark.unwrap();
    assert_eq!(td.bags[1].elements[0].in_mark, Some(i));
    let j = td.bags[1].elements[0].out_mark.unwrap();
    assert_eq!(td.bags[2].elements[0].in_mark, Some(j));
    assert_eq!(span(&td).unwrap(), 2);
    assert!(is_isomorphic(&ext(&td).unwrap().0, &star));
}

#[test]
fn encode_single_bag_and_errors() {
    let tri = cycle_graph(3);
    let td = encode_classical(&tri, &ClassicalDecomposition::path(vec![vec![0, 1, 2]]), 2).unwrap();
    assert_eq!(td.len(), 1);
    assert!(is_isomorphic(&ext(&td).unwrap().0, &tri));
    let too_small = encode_classical(&tri, &ClassicalDecomposition::path(vec![vec![0, 1, 2]]), 1);
    assert!(matches!(too_small, Err(Error::Width { size: 3, k: 1 })));
    let uncovered = ClassicalDecomposition::path(vec![vec![0, 1], vec![1, 2]]);
    assert!(matches!(encode_classical(&tri, &uncovered, 1), Err(Error::Classical(_))));
    let p = path_graph(3);
    let gap = ClassicalDecomposition::path(vec![vec![0, 1], vec![2], vec![1, 2]]);
    assert!(matches!(encode_classical(&p, &gap, 1), Err(Error::Classical(_))));
}

#[test]
fn colors_survive_encoding() {
    let mut b = StructureBuilder::colored_graph();
    b.add_elements(2);
    b.add_edge(0, 1).unwrap();
    b.set_label(1, P0).unwrap();
    let s = b.build().unwrap();
    let td = encode_classical(&s, &ClassicalDecomposition::path(vec![vec![0], vec![0, 1]]), 1).unwrap();
    assert!(is_isomorphic(&ext(&td).unwrap().0, &s));
}

#[test]
fn bag_class_ignores_local_order() {
    let mut a = marked(3, &[(0, 1)], &[(2, 0)]);
    a.add_tuple(0, vec![0, 1]);
    let mut b = marked(3, &[(2, 1)], &[(1, 0)]);
    b.add_tuple(0, vec![0, 2]);
    a.normalize(&cg());
    b.normalize(&cg());
    assert_eq!(a.class(&cg()), b.class(&cg()));
    let mut c = marked(3, &[(2, 1)], &[(1, 0)]);
    c.add_tuple(0, vec![0, 1]);
    assert_ne!(a.class(&cg()), c.class(&cg()));
}

#[test]
fn restriction_drops_dangling_marks() {
    let td = chained(4);
    let r = restrict_to(&td, &[1, 2]).unwrap();
    assert_eq!(validate_td(&r), Ok(()));
    assert_eq!(span(&r).unwrap(), 1);
    assert!(restrict_to(&td, &[0, 2]).is_err());
}

#[test]
fn tree_code_is_invariant_under_relabelling() {
    let p = path_graph(4);
    let d1 = ClassicalDecomposition::new(vec![None, Some(0), Some(0)], vec![vec![1, 2], vec![0, 1], vec![2, 3]]);
    let d2 = ClassicalDecomposition::new(vec![Some(2), Some(2), None], vec![vec![2, 3], vec![0, 1], vec![1, 2]]);
    let t1 = encode_classical(&p, &d1, 1).unwrap();
    let t2 = encode_classical(&p, &d2, 1).unwrap();
    assert_eq!(tree_code(&t1).unwrap(), tree_code(&t2).unwrap());
    let d3 = ClassicalDecomposition::path(vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
    assert_ne!(tree_code(&t1).unwrap(), tree_code(&encode_classical(&p, &d3, 1).unwrap()).unwrap());
}
