use std::io;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] esprit_core::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed data file: {0}")]
    Format(String),
    #[error("unknown preset `{0}` (expected exp1, exp2, exp3 or exp4)")]
    UnknownPreset(String),
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("log-log fit needs positive data, got ({x}, {y})")]
    NonPositiveData { x: f64, y: f64 },
    #[error("log-log fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("column `{0}` not found")]
    MissingColumn(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
