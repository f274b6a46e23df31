use thiserror::Error;

use crate::decomp::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown element {0}")]
    UnknownElement(usize),
    #[error("unknown tree node {0}")]
    UnknownNode(usize),
    #[error("unknown class {0}")]
    UnknownClass(usize),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid bag: {0}")]
    InvalidBag(String),
    #[error("decomposition is not valid ({} violation(s))", .0.len())]
    InvalidDecomposition(Vec<Violation>),
    #[error("colour conflict while merging class {class}")]
    MergeConflict { class: usize },
    #[error("classical decomposition: {0}")]
    Classical(String),
    #[error("bag of size {size} exceeds width budget k = {k}")]
    Width { size: usize, k: usize },
    #[error("vocabularies differ")]
    VocabularyMismatch,
    #[error("budget exceeded after {explored} explored positions")]
    BudgetExceeded { explored: u64 },
    #[error("missing annotations: {0}")]
    MissingAnnotations(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("search bound exceeded: {0}")]
    SearchBound(String),
    #[error("impossible census: components {0:?} all exceed the large-component threshold")]
    ImpossibleCensus(Vec<usize>),
    #[error("structure is not series-parallel: {0}")]
    NotSeriesParallel(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
