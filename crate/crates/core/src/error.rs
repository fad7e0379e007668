use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped by cause so that callers (the CLI in particular) can
/// map them onto "bad input" versus "failed while running".
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("instance too large for exact search: {size} points (threshold {threshold}); use the greedy bounds instead")]
    TooLarge { size: usize, threshold: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("amplitude too large: Hölder audit failed ({detail}); maximal admissible amplitude is {max_admissible:.6e}")]
    AmplitudeTooLarge { detail: String, max_admissible: f64 },

    #[error("kappa = {kappa} outside the admissible interval (0, {upper})")]
    KappaOutOfRange { kappa: f64, upper: f64 },

    #[error("packing too small: found {found} points, need an even number of at least 2")]
    PackingTooSmall { found: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid user input rather than by a failure
    /// during execution.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::GridMismatch(_)
                | Error::Domain(_)
                | Error::Invariant(_)
                | Error::EmptyInput(_)
                | Error::TooLarge { .. }
                | Error::KappaOutOfRange { .. }
                | Error::LengthMismatch { .. }
                | Error::Precondition(_)
                | Error::InsufficientData(_)
                | Error::AmplitudeTooLarge { .. }
                | Error::PackingTooSmall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
