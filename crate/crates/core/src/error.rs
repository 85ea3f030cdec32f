use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("{what}: size {requested} exceeds cap {cap}{}", hint.as_ref().map(|h| format!(" ({h})")).unwrap_or_default())]
    Capacity {
        what: &'static str,
        requested: u128,
        cap: u128,
        hint: Option<String>,
    },

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("lanczos did not converge after {iterations} matrix-vector products (best residual {best_residual:e})")]
    Convergence { iterations: usize, best_residual: f64 },

    #[error("unsupported observable: {0}")]
    UnsupportedObservable(String),

    #[error("unsupported support: {0}")]
    UnsupportedSupport(String),

    #[error("markov chain stuck on zero-weight configuration {index} after {attempts} rejected proposals")]
    StuckChain { index: usize, attempts: usize },

    #[error("zero amplitude at sampled configuration {index}")]
    DegenerateAmplitude { index: usize },

    #[error("total weight over the concentrated ensemble is zero")]
    EmptySupport,

    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfiguration(_) => "invalid-configuration",
            Error::OutOfRange(_) => "out-of-range",
            Error::Capacity { .. } => "capacity",
            Error::SingularParameter(_) => "singular-parameter",
            Error::Convergence { .. } => "convergence",
            Error::UnsupportedObservable(_) => "unsupported-observable",
            Error::UnsupportedSupport(_) => "unsupported-support",
            Error::StuckChain { .. } => "stuck-chain",
            Error::DegenerateAmplitude { .. } => "degenerate-amplitude",
            Error::EmptySupport => "empty-support",
            Error::InternalConsistency(_) => "internal-consistency",
            Error::Config(_) => "config",
            Error::Snapshot(_) => "snapshot",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
