use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field value is not finite at node {node}")]
    NonFiniteField { node: usize },

    #[error("every tau mass is zero; the grid carries no measure")]
    ZeroMass,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("radial support hypotheses not met: {0}")]
    RadialHypotheses(String),

    #[error("no root of t*R'(t) = 1 in [{lo:e}, {hi:e}]")]
    NoRadialRoot { lo: f64, hi: f64 },

    #[error("Gram matrix numerically singular at degree {degree}")]
    SingularGram { degree: usize },

    #[error("too few usable points for a rate fit: need {needed}, have {have}")]
    TooFewPoints { needed: usize, have: usize },

    #[error("exact partition function refused for n = {0} (supported: 1..=3)")]
    PartitionSizeRefused(usize),

    #[error("empty support set")]
    EmptySupport,

    #[error("neighbourhood covers all of Y; the tail ratio is vacuous")]
    VacuousNeighbourhood,

    #[error("missing anchor: {0}")]
    MissingAnchor(String),

    #[error("chain not equilibrated: {0}")]
    NotEquilibrated(String),

    #[error("hypothesis violated ({id}): {detail}")]
    HypothesisViolation { id: &'static str, detail: String },

    #[error("equilibrium solver did not converge after {iterations} iterations")]
    Unconverged { iterations: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
