use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("level {level} is beyond the materialized depth {depth} and the diagram has no stationary tail")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("objects belong to different diagrams")]
    DiagramMismatch,

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("invalid cut levels: {0}")]
    InvalidCuts(String),

    #[error("path count overflow at level {0}")]
    Overflow(usize),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid group element: {0}")]
    InvalidElement(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("stationary tail is not primitive")]
    NotPrimitive,

    #[error("diagram has no stationary tail")]
    NoStationaryTail,

    #[error("measure list is empty")]
    EmptyMeasureList,

    #[error("matrix is not Hermitian at ({0}, {1})")]
    NotHermitian(usize, usize),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("no castle of {cells} equal cylinders at level {level}")]
    NoCastle { cells: usize, level: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("depth {depth} exhausted: {reason}")]
    DepthExhausted { depth: usize, reason: String },

    #[error("character value is complex; use the complex evaluation path")]
    ComplexValued,

    #[error("sign functional is not consistent: {0}")]
    InconsistentSign(String),

    #[error("no witness found within depth {0}")]
    NotFound(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),
}
