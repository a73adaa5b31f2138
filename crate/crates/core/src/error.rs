use thiserror::Error;

/// Errors shared across the toolkit.
///
/// Variants are grouped by how the CLI reports them: validation problems
/// (bad inputs, malformed models) exit with code 2, numerical failures with
/// code 3, and an exhausted sampling budget with code 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("family member {index}: {reason}")]
    InvalidFamilyMember { index: usize, reason: String },

    #[error("invalid marking rule: {0}")]
    InvalidMarking(String),

    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("degenerate regime: mu = 0 and epsilon = 0")]
    DegenerateRegime,

    #[error("conditioning on a null event: skeleton survival probability is zero")]
    NullConditioning,

    #[error("{0} failed to converge")]
    NoConvergence(&'static str),

    #[error("sampling budget exceeded: {attempts} attempts, {accepted} accepted (target {target})")]
    BudgetExceeded {
        attempts: u64,
        accepted: u64,
        target: u64,
    },

    #[error("too few samples: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },

    #[error("samples must be sorted in ascending order")]
    UnsortedSamples,

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NoConvergence(_) => 3,
            Error::BudgetExceeded { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
