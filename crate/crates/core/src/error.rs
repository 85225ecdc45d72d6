use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("admissible set S_N is empty for N={n}, mu={mu}, p={p}")]
    EmptySet { n: u32, mu: f64, p: f64 },

    #[error("parameters (N={n}, mu={mu}, p={p}) lie outside the lifespan theorem: {reason}")]
    OutsideTheorem { n: u32, mu: f64, p: f64, reason: String },

    #[error("hypergeometric series did not converge after {terms} terms (z={z})")]
    NoConvergence { terms: usize, z: f64 },

    #[error("point (r={r}, t={t}) lies outside the light cone |x| < 1+t")]
    Domain { r: f64, t: f64 },

    #[error("beta={beta} is not covered by either bound regime: {reason}")]
    WrongRegime { beta: f64, reason: String },

    #[error("grid too coarse: r0/dr = {cells:.2} < {required}")]
    GridTooCoarse { cells: f64, required: usize },

    #[error("non-finite value encountered at t={t}")]
    NonFinite { t: f64 },

    #[error("E1 = {value} is not positive although beta-1+mu > 0")]
    PositivityViolated { value: f64 },

    #[error("no blowup before sigma cap {cap} (eps={eps})")]
    NoBlowup { eps: f64, cap: f64 },

    #[error("consistency check failed: {0}")]
    CheckFailed(String),

    #[error("insufficient data for a fit: {0}")]
    InsufficientData(String),

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

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs or the filesystem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NonFinite { .. }
                | Error::PositivityViolated { .. }
                | Error::NoBlowup { .. }
                | Error::CheckFailed(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Json { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
