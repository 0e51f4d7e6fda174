use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate MVA: norm {norm:e} m is below {threshold:e} m")]
    DegenerateMva { norm: f64, threshold: f64 },

    #[error("dictionary is rank deficient (condition ratio {ratio:e})")]
    RankDeficientDictionary { ratio: f64 },

    #[error("observation length {rows} does not exceed the number of paths {paths}")]
    DivisionGuard { rows: usize, paths: usize },

    #[error("both measurement noise and prediction covariance are degenerate")]
    BothDegenerate,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty box: lower bound exceeds upper bound in dimension {dim}")]
    EmptyBox { dim: usize },

    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
