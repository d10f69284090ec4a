use thiserror::Error;

/// Errors raised by the library. CLI exit codes are derived from
/// [`Error::is_usage`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed edge-list line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("edge list contains no vertices and no edges")]
    EmptyGraph,

    #[error("graph with {n} vertices exceeds the dense-matrix cap of {cap}")]
    ResourceLimit { n: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible degree: {0}")]
    InfeasibleDegree(String),

    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailure { attempts: usize, reason: String },

    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} sweeps")]
    ConvergenceFailure { index: usize, iterations: usize },

    #[error("spectrum has zero spread; bandwidth undefined")]
    DegenerateSpectrum,

    #[error("grid [{lo}, {hi}] excludes {excluded:.3e} of kernel mass")]
    GridTooNarrow { lo: f64, hi: f64, excluded: f64 },

    #[error("Stieltjes iteration did not converge within {max_iter} iterations at z = {re} + {im}i (residual {residual:.3e})")]
    NoConvergence { max_iter: usize, re: f64, im: f64, residual: f64 },

    #[error("converged Stieltjes solution violates Im(c_m) Im(z) > 0 for block {block}")]
    BranchViolation { block: usize },

    #[error("infeasible search space: {0}")]
    InfeasibleSpace(String),

    #[error("replicate {replicate} failed: {source}")]
    Replicate { replicate: usize, source: Box<Error> },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Errors caused by invalid user input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InfeasibleDegree(_)
                | Error::InfeasibleSpace(_)
                | Error::Config(_)
                | Error::MalformedLine { .. }
                | Error::EmptyGraph
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
