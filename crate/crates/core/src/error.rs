use thiserror::Error;

/// Errors raised by the aggregation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A distribution-like value violates its representation invariants.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    /// A predicted probability of zero was assigned to the realised outcome.
    #[error("infinite loss: zero probability predicted for outcome {outcome}")]
    InfiniteLoss { outcome: usize },

    /// The outcome puts mass where the forecast density vanishes.
    #[error("absolute continuity violated at support point {index}")]
    AbsoluteContinuity { index: usize },

    /// The two arguments use incompatible representations (grids, dimensions).
    #[error("incompatible representations: {0}")]
    Incompatible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("size error: {0}")]
    Size(String),

    /// An internal invariant failed; this indicates a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{stream} stream exhausted at round {round}")]
    StreamExhausted { stream: &'static str, round: usize },

    #[error("loss evaluation failed at round {round}{}: {source}", expert_label(*.expert))]
    LossEvaluation {
        round: usize,
        expert: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn expert_label(expert: Option<usize>) -> String {
    match expert {
        Some(n) => format!(" (expert {n})"),
        None => " (learner)".to_string(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
