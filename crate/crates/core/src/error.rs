use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variable `{variable}` = {value} is outside its bounds [{lower}, {upper}]")]
    BoundsViolation {
        variable: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("normalized component {index} = {value} is outside [0, 1]")]
    Domain { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("output channel `{0}` is degenerate (zero variance)")]
    DegenerateChannel(String),

    #[error("matrix is not positive definite after jitter escalation to {jitter:e}")]
    Conditioning { jitter: f64 },

    #[error("unknown output channel `{0}`")]
    UnknownChannel(String),

    #[error("unknown design variable `{0}`")]
    UnknownVariable(String),

    #[error("stage {stage} is infeasible (max violation {max_violation:e})")]
    StageInfeasible {
        stage: usize,
        max_violation: f64,
        point: Vec<f64>,
    },

    #[error("sweep cell ({optimized}, {perturbed}) hit an infeasible sub-optimization at grid point {index}")]
    InfeasibleSweep {
        optimized: String,
        perturbed: String,
        index: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad user input rather than by a numerical or
    /// internal failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::BoundsViolation { .. }
            | Error::Domain { .. }
            | Error::InvalidArgument(_)
            | Error::DegenerateChannel(_)
            | Error::UnknownChannel(_)
            | Error::UnknownVariable(_)
            | Error::Json { .. }
            | Error::Csv { .. } => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            _ => false,
        }
    }

    /// Stable short identifier used in machine-parsable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BoundsViolation { .. } => "bounds",
            Error::Domain { .. } => "domain",
            Error::InvalidArgument(_) => "argument",
            Error::DegenerateChannel(_) => "degenerate_channel",
            Error::Conditioning { .. } => "conditioning",
            Error::UnknownChannel(_) => "unknown_channel",
            Error::UnknownVariable(_) => "unknown_variable",
            Error::StageInfeasible { .. } => "stage_infeasible",
            Error::InfeasibleSweep { .. } => "infeasible_sweep",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
        }
    }
}
