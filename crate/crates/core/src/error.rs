use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The argument of `tan` contains a pole, so no finite enclosure exists.
    #[error("tan enclosure crosses a pole on [{lo}, {hi}]")]
    PoleCrossed { lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("star set is empty")]
    InfeasibleStar,

    #[error("simplex did not terminate within {0} iterations")]
    LpIterationLimit(usize),

    #[error("exact analysis exceeded the split budget of {cap} leaves")]
    SplitBudgetExceeded { cap: usize },

    #[error("outside the state space")]
    OutOfDomain,

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("network layer {layer}: {msg}")]
    Network { layer: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
