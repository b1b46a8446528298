use thiserror::Error;

use crate::graph::GraphIssue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {}", format_issues(.0))]
    InvalidGraph(Vec<GraphIssue>),
    #[error("vertex `{0}` receives no edges (it is a source)")]
    HasSource(String),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("edges `{0}` and `{1}` do not compose: source of the first differs from range of the second")]
    NotAPath(String, String),
    #[error("malformed path key `{0}`")]
    BadPathKey(String),
    #[error("path `{0}` is too long for this level")]
    PathTooLong(String),
    #[error("source of the lifted path does not match the range of the residue path")]
    SourceRangeMismatch,
    #[error("spanning element paths do not meet at r(tau): {0}")]
    InvalidSpanningElement(String),

    #[error("omega is not a divisor chain at index {0}")]
    NotDivisorChain(usize),
    #[error("omega entry at index {0} is not positive")]
    NonPositiveOmega(usize),
    #[error("omega prefix is empty")]
    EmptyOmega,
    #[error("gcd with omega has not provably stabilised on this prefix")]
    UnstablePrefix,
    #[error("level {0} is outside the omega prefix")]
    LevelOutOfRange(usize),
    #[error("elements live at different levels ({0} vs {1})")]
    LevelMismatch(usize, usize),
    #[error("level {from} cannot be refined to level {to}")]
    LevelNotInChain { from: usize, to: usize },
    #[error("expected {expected} weights at level {level}, found {found}")]
    WeightCount {
        level: usize,
        expected: usize,
        found: usize,
    },

    #[error("measure restricted to the class has zero mass")]
    ZeroMass,
    #[error("measure is zero")]
    ZeroMeasure,
    #[error("measure has a negative weight at `{0}`")]
    NotPositive(String),
    #[error("tower is not consistent at level {level}, path `{path}`")]
    NotConsistent { level: usize, path: String },
    #[error("measure is not a probability measure (mass {0})")]
    NotProbability(f64),
    #[error("measure is not subinvariant: level {level}, path `{path}`")]
    NotSubinvariant { level: usize, path: String },

    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("linear solve failed: singular matrix")]
    SolveFailure,
    #[error("beta = {beta} is not above the critical value {critical}")]
    BetaNotSupercritical { beta: f64, critical: f64 },
    #[error("simplicity needs n_k -> infinity; pass the divergence flag")]
    DivergenceUnknown,

    #[error("truncation cap leaves an empty basis")]
    CapTooSmall,
    #[error("cylinder ({0}, level {1}) is empty in the truncation")]
    EmptyCylinder(String, usize),

    #[error("internal identity violated: {0}")]
    Invariant(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Precondition,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidGraph(_) | UnknownEdge(_) | UnknownVertex(_) | NotAPath(..) | BadPathKey(_)
            | NotDivisorChain(_) | NonPositiveOmega(_) | EmptyOmega | WeightCount { .. }
            | Parse(_) => ErrorKind::Input,
            Invariant(_) | NoConvergence(_) | SolveFailure => ErrorKind::Internal,
            _ => ErrorKind::Precondition,
        }
    }
}

fn format_issues(issues: &[GraphIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
