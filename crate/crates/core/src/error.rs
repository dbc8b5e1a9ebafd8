use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("series too short: need at least {needed} samples, have {available}")]
    InsufficientLength { needed: usize, available: usize },

    #[error("integration diverged at step {step}: |x| = {radius:.3e} exceeds safety radius {limit}")]
    Diverged { step: usize, radius: f64, limit: f64 },

    #[error("state at sample {sample} is outside the observable domain: {reason}")]
    Domain { sample: usize, reason: String },

    #[error("rank {requested} exceeds the numerical rank; largest admissible rank is {admissible}")]
    Rank { requested: usize, admissible: usize },

    #[error(
        "cross-moment G0 has numerical rank {rank} below its {rows} rows; \
         use the SVD variant (alg4) with a truncation rank, or augment the dual observables"
    )]
    Conditioning { rank: usize, rows: usize },

    #[error(
        "near-defective operator: eigenvector condition number {cond:.3e} exceeds {limit:.3e}; \
         lower the rank or change the observables"
    )]
    NearDefective { cond: f64, limit: f64 },

    #[error("eigenvalue {index} is zero and has no continuous-time logarithm")]
    ZeroEigenvalue { index: usize },

    #[error("{0} did not converge")]
    NoConvergence(&'static str),

    #[error("realization {realization}: {source}")]
    Realization {
        realization: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Strips realization annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Realization { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
