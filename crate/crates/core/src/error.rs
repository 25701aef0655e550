use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Reasons an edge-list document is rejected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing header line `n <count>`")]
    MissingHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("nonpositive weight {0}")]
    NonpositiveWeight(f64),
    #[error("nonpositive measure {0}")]
    NonpositiveMeasure(f64),
    #[error("duplicate mu entry for vertex {0}")]
    DuplicateMu(usize),
    #[error("missing mu for vertex {0}")]
    MissingMu(usize),
}

/// Failures of the iterative solvers. These map to CLI exit code 3.
#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error(
        "newton did not converge at p = {p} (pair {index}): residual {residual:.3e} after {iterations} iterations"
    )]
    NonConvergence {
        index: usize,
        p: f64,
        iterations: usize,
        residual: f64,
        last_lambda: f64,
        last_iterate: Vec<f64>,
    },
    #[error("continuation step halving exhausted between p = {p_from} and p = {p_to} (pair {index})")]
    StepHalvingExhausted { index: usize, p_from: f64, p_to: f64 },
    #[error("could not bracket eigenvalue {k}: {trace}")]
    BracketFailure { k: usize, trace: String },
    #[error("zero count is not monotone in lambda near {lambda} ({trace})")]
    SturmViolation { lambda: f64, trace: String },
    #[error("linear system is singular")]
    Singular,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("exact computation is limited to n <= {cap} (got n = {n})")]
    CapExceeded { n: usize, cap: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, kind: ParseErrorKind) -> Self {
        Error::Parse { line, kind }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
