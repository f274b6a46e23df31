//! Width- and span-bounded tree and path decompositions of finite relational
//! structures.
//!
//! The crate is organised bottom-up:
//!
//! * [`structure`]: finite structures over a relational vocabulary, Gaifman
//!   distances and isomorphism testing by colour refinement.
//! * [`decomp`]: decompositions encoded as trees of k-bags with input/output
//!   interface marks, the quotient reconstruction [`decomp::ext`], span and
//!   width, and conversion from classical (bag-subset) decompositions.
//! * [`ef`]: Ehrenfeucht-Fraisse game search deciding agreement on all
//!   first-order sentences up to a quantifier rank.
//! * [`gadgets`]: parameter planners and generators for the gadget families
//!   (`Gadget`, `Bicol`, `Bicolit`, `Loz`, and the structures built from them)
//!   together with witness decompositions.
//! * [`falsifier`]: exhaustive decomposition search at micro scale and the
//!   checkers for the counting arguments (Supp, distance bounds, trimming,
//!   censuses, the large-component walk).
//! * [`io`]: JSON file formats, PACE `.gr`/`.td` import and DOT export.

pub mod decomp;
pub mod ef;
pub mod error;
pub mod falsifier;
pub mod gadgets;
pub mod io;
pub mod structure;
mod unionfind;

pub use error::{Error, Result};
pub use structure::{Annotation, Role, Structure, StructureBuilder, Vocabulary, Word};
