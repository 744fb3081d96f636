use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max entry asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("spectral function needs a strictly positive argument (min eigenvalue {min_eigenvalue:.3e})")]
    SingularInput { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rank {rank} outside 1..={dim}")]
    BadRank { rank: usize, dim: usize },

    #[error("state is not faithful (min eigenvalue {min_eigenvalue:.3e})")]
    NonFaithful { min_eigenvalue: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix is not in the subalgebra (residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },

    #[error("operators are not normalized: Tr X*X = {x_norm:.6}, Tr Y*Y = {y_norm:.6}")]
    NotNormalized { x_norm: f64, y_norm: f64 },

    #[error("random element was degenerate after {attempts} attempts")]
    DegenerateRandomElement { attempts: usize },

    #[error("structure inconsistency: {0}")]
    StructureInconsistency(String),

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("subalgebra is not invariant under the modular operator (residual {residual:.3e})")]
    NotInvariant { residual: f64 },

    #[error("bad cell distribution: {0}")]
    BadCellDistribution(String),

    #[error("invalid classical model: {0}")]
    InvalidModel(String),

    #[error("support of the first state is not contained in the support of the second (leaked weight {weight:.3e})")]
    SupportViolation { weight: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Validation failures (bad input) as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. }
                | Error::DimensionMismatch { .. }
                | Error::BadRank { .. }
                | Error::NonFaithful { .. }
                | Error::InvalidState(_)
                | Error::NotInAlgebra { .. }
                | Error::NotNormalized { .. }
                | Error::BadWeights(_)
                | Error::BadCellDistribution(_)
                | Error::InvalidModel(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }

    /// Short machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "not_hermitian",
            Error::ConvergenceFailure(_) => "convergence_failure",
            Error::SingularInput { .. } => "singular_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BadRank { .. } => "bad_rank",
            Error::NonFaithful { .. } => "non_faithful",
            Error::InvalidState(_) => "invalid_state",
            Error::NotInAlgebra { .. } => "not_in_algebra",
            Error::NotNormalized { .. } => "not_normalized",
            Error::DegenerateRandomElement { .. } => "degenerate_random_element",
            Error::StructureInconsistency(_) => "structure_inconsistency",
            Error::BadWeights(_) => "bad_weights",
            Error::NotInvariant { .. } => "not_invariant",
            Error::BadCellDistribution(_) => "bad_cell_distribution",
            Error::InvalidModel(_) => "invalid_model",
            Error::SupportViolation { .. } => "support_violation",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
