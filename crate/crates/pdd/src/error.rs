//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error enum.
///
/// Variants are grouped by failure class so the CLI can map them onto
/// distinct process exit codes.
#[derive(Debug, Error)]
pub enum PddError {
    /// A caller passed a value outside an operation's documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A run configuration is structurally valid but describes an
    /// unsolvable or inconsistent setup.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested combination of features is deliberately not supported.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An interface grid was used before all node values were filled in.
    #[error("incomplete interface grid: {0}")]
    IncompleteGrid(String),

    /// A path or particle hit an absorbing boundary but no Dirichlet datum
    /// was supplied for it.
    #[error("missing boundary datum: {0}")]
    MissingDatum(String),

    /// A stationary-mode path exhausted its step budget without absorbing.
    #[error("path exhausted {0} steps without reaching an absorbing face")]
    HorizonExhausted(u64),

    /// Branching-estimator integrability conditions do not hold.
    #[error("branching assumptions violated: {0}")]
    AssumptionViolated(String),

    /// An iterative solve failed to reach its tolerance.
    #[error("iteration diverged: {0}")]
    Divergence(String),

    /// A speedup ratio was requested from a degenerate measurement.
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    /// Configuration file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PddError>;

impl PddError {
    /// Process exit code for the CLI; groups variants into stable classes.
    pub fn exit_code(&self) -> u8 {
        match self {
            PddError::InvalidArgument(_) | PddError::Config(_) | PddError::ConfigParse(_) => 2,
            PddError::Unsupported(_) => 3,
            PddError::AssumptionViolated(_) => 4,
            PddError::Divergence(_) | PddError::HorizonExhausted(_) => 5,
            PddError::IncompleteGrid(_) | PddError::MissingDatum(_) => 6,
            PddError::InvalidMeasurement(_) => 7,
            PddError::Io(_) => 8,
        }
    }
}
