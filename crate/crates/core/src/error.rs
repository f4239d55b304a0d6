use thiserror::Error;

/// Errors raised by the lab's operations.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("no shape parameter yields a unit-integral kernel: {0}")]
    InfeasibleIntegral(String),
    #[error("mollified domain is empty: {0}")]
    DomainExhausted(String),
    #[error("shift leaves no overlap: {0}")]
    EmptyOverlap(String),
    #[error("negative density sample {value} at node {node}")]
    NegativeDensity { node: usize, value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid ladder: {0}")]
    InvalidLadder(String),
    #[error("insufficient samples for a rate fit: {0}")]
    InsufficientSamples(String),
    #[error("exponent relation violated: {0}")]
    ExponentRelation(String),
    #[error("Nyquist violation: {0}")]
    Nyquist(String),
    #[error("final time {t_final} is past the gradient blow-up time {t_blowup}")]
    BlowUpTime { t_final: f64, t_blowup: f64 },
    #[error("inadmissible Riemann states: {0}")]
    InadmissibleStates(String),
    #[error("boundary condition violated: |u.n| = {0}")]
    BoundaryCondition(f64),
    #[error("test function support: {0}")]
    Support(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
