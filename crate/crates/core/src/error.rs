use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, IsacError>;

#[derive(Debug, Error)]
pub enum IsacError {
    #[error("unsupported constellation: {0}")]
    UnsupportedConstellation(String),

    #[error("ring ratio has {got} entries but {m} symbols cannot be split evenly over them")]
    RingRatioMismatch { m: usize, got: usize },

    #[error("constellation invariant violated: {0}")]
    InvariantViolation(String),

    #[error("degenerate symbol: |s| = {magnitude:e} at index {index}")]
    DegenerateSymbol { index: usize, magnitude: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("only {found} separated peaks found, {wanted} requested")]
    PeakDeficit { found: usize, wanted: usize },

    #[error("rank deficit: singular value {index} is {ratio:e} of the largest")]
    RankDeficit { index: usize, ratio: f64 },

    #[error("no feasible restart; best residual {best_residual:e}")]
    Infeasible { best_residual: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl IsacError {
    /// Short machine-readable tag, printed by the CLI on failure.
    pub fn kind(&self) -> &'static str {
        match self {
            IsacError::UnsupportedConstellation(_) => "unsupported_constellation",
            IsacError::RingRatioMismatch { .. } => "ring_ratio_mismatch",
            IsacError::InvariantViolation(_) => "invariant_violation",
            IsacError::DegenerateSymbol { .. } => "degenerate_symbol",
            IsacError::InvalidConfig(_) => "invalid_config",
            IsacError::InvalidScenario(_) => "invalid_scenario",
            IsacError::PeakDeficit { .. } => "peak_deficit",
            IsacError::RankDeficit { .. } => "rank_deficit",
            IsacError::Infeasible { .. } => "infeasible",
            IsacError::Io { .. } => "io",
            IsacError::Json { .. } => "json",
        }
    }
}
