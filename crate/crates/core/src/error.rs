use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the supported domain (e.g. a Lorentz exponent below 1).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("generator {generator} maps two vertices onto `{target}`")]
    Injectivity { generator: usize, target: String },

    #[error("generator {generator} redeclares an edge from `{source_id}`")]
    DuplicateEdge { generator: usize, source_id: String },

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("size cap exceeded: {what} would need {needed} (cap {cap})")]
    SizeCap {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
