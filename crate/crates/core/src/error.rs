use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("statistics mismatch")]
    StatisticsMismatch,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("permanent of size {size} exceeds cap {cap}")]
    PermanentTooLarge { size: usize, cap: usize },
    #[error("resolvent (1{sign}rho) is singular to tolerance (condition estimate {condition:.3e})")]
    SingularResolvent { sign: char, condition: f64 },
    #[error("need {needed} power traces, got {available}")]
    InsufficientPowerTraces { needed: usize, available: usize },
    #[error("bosonic trace diverges: spectral radius estimate {radius:.6} >= 1")]
    Divergent { radius: f64 },
    #[error("Fredholm determinant vanishes to tolerance ({value:.3e})")]
    VanishingDeterminant { value: f64 },
    #[error("convergence constraint fails at power q = {q}")]
    NotAdmissible { q: usize },
    #[error("factor vanishes at shell {shell}: the trace has a pole")]
    Pole { shell: usize },
    #[error("product diverges: tail estimate grows with the cutoff")]
    TailGrowing,
    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;
