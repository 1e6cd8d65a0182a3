use std::path::PathBuf;

/// Errors produced by the beamforming toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("two-level spectrum requires gamma_high > gamma_low > 0 (got low={low:e}, high={high:e})")]
    InvalidLevels { low: f64, high: f64 },

    #[error("MUSIC found only {found} local minima, {wanted} sources requested")]
    UnderResolved { found: usize, wanted: usize },

    #[error("no interference detected: every interferer power estimate is zero")]
    NoInterference,

    #[error("angle {angle_deg} deg lies outside every reconstruction sector")]
    OutsideSector { angle_deg: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for errors caused by user input (configuration, files, arguments)
    /// rather than by a numerical failure inside the pipeline.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::InvalidScenario(_)
                | Error::Config(_)
                | Error::Io { .. }
                | Error::Csv { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
