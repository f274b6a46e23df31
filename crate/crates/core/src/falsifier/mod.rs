//! Micro-scale decomposition search and checkers for the counting arguments
//! behind the gadget constructions.

mod census;
mod checks;
mod enumerate;
mod refute;

pub use census::{
    algorithm1_walk, inode_census, large_component, walk_with, ComponentCount, InodeCensus, LargeComponent,
    WalkHalt, WalkReport,
};
pub use checks::{
    check_lemma1, check_supp, marked_nodes, minimal_connecting_subtree, overlap_profile, trim_to_bounded_degree,
    Lemma1Violation, OverlapEntry, OverlapProfile, TrimFinding, TrimResult,
};
pub use enumerate::{enumerate_decompositions, Enumeration, IndexMode, SearchConfig, MAX_SEARCH_ELEMENTS};
pub use refute::{micro_refute, tau_structure, PairOutcome, Palette, RefuteReport, TREE_EDGE};
