use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing or malformed header, expected `{expected}`")]
    MissingHeader { expected: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o: {0}")]
    Io(#[from] io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("registry line {line}: {reason}")]
    Registry { line: usize, reason: String },

    #[error("user `{0}` is not a confirmed case")]
    NotConfirmed(String),

    #[error("k-means needs at least k={k} distinct values, got {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feature window [{start}, {end}] outside score coverage [{first}, {last}] for `{user}`")]
    WindowOutOfRange { user: String, start: i64, end: i64, first: i64, last: i64 },

    #[error("model line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("infection rate {rate} unattainable: {reason}")]
    RateUnattainable { rate: f64, reason: String },

    #[error("malformed risk map: {0}")]
    RiskMap(String),

    #[error("malformed score file: {0}")]
    Scores(String),
}

pub type Result<T> = std::result::Result<T, Error>;
