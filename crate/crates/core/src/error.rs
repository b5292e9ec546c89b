use alloc::string::String;

/// Errors produced by the performance model, the question pool and the
/// questioning loop.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("kernel parameter `{name}` must be strictly positive and finite, got {value}")]
    InvalidKernel { name: &'static str, value: f64 },

    #[error("{what} must lie in [0, 1], got {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("kernel matrix is not positive definite (pivot {pivot})")]
    Conditioning { pivot: usize },

    #[error("posterior grid must be uniform over [0, 1] with a node at 0.5")]
    InvalidGrid,

    #[error("observation locations must be pairwise distinct (duplicate at {0})")]
    DuplicateLocation(f64),

    #[error("answer for concept {found} recorded into the model of concept {expected}")]
    ConceptMismatch { expected: usize, found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("question pool is exhausted")]
    PoolExhausted,

    #[error("no uncertainty split supplied for concept {0}")]
    MissingSplit(usize),

    #[error("concept {0} is not covered by the answer source")]
    UnknownConcept(usize),

    #[error("no stored probability for sample {sample}, concept {concept}")]
    MissingEntry { sample: usize, concept: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("answer source failed: {0}")]
    Adapter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
