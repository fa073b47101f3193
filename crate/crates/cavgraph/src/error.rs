use thiserror::Error;

/// Every failure the library reports. User-facing front ends map variants to exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("duplicate vertex name `{0}`")]
    DuplicateVertex(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph is not a tree")]
    NotATree,
    #[error("edge sequence is not chained at position {0}")]
    NotChained(usize),
    #[error("configuration is not regular")]
    NotRegular,
    #[error("Nil configuration has no pseudo-energy")]
    NilInput,
    #[error("configuration is not a member of block {0}")]
    NotInBlock(String),
    #[error("edge must be given in its positive direction")]
    NotPositive,
    #[error("operator is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operands live on different truncated spaces")]
    SpaceMismatch,
    #[error("unknown named graph `{0}`")]
    UnknownName(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("step budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("preparation invariant violated: {0}")]
    Plan(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
