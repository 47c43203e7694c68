use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsupported configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("bracket [{lo}, {hi}] does not contain a sign change")]
    NoSignChange { lo: f64, hi: f64 },

    /// A matrix that must be invertible (pilot block, equalizer) is not.
    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("evaluation too close to a pole at G = {0:.6e}")]
    NearPole(f64),

    /// The quartic for the first-order extremes has complex roots.
    #[error("extremes are not all real; no first-order bulk separation")]
    NoFirstOrderSeparation,

    /// A square root in a support approximation has a negative argument, or
    /// the extremes are not ordered: the two bulks are predicted to merge.
    #[error("bulks merged: {0}")]
    BulksMerged(String),

    /// The approximation is not applicable for these parameters.
    #[error("outside the regime of the approximation: {0}")]
    Regime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Dimension(_) => "dimension",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::Singular(_) => "singular",
            Error::NearPole(_) => "near_pole",
            Error::NoFirstOrderSeparation => "no_first_order_separation",
            Error::BulksMerged(_) => "bulks_merged",
            Error::Regime(_) => "regime",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
