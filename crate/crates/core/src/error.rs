use thiserror::Error;

/// Errors raised by model validation, filtering and the benchmark driver.
#[derive(Debug, Error)]
pub enum TphdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-PSD covariance: {0}")]
    NonPsd(String),

    #[error("probability out of range: {name} = {value}")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truth entry {index} outside horizon: {reason}")]
    TruthOutOfHorizon { index: usize, reason: String },

    #[error("truth entry {index} references birth component {component}, but only {available} exist")]
    UnknownBirthComponent {
        index: usize,
        component: usize,
        available: usize,
    },

    #[error("singular innovation covariance for component {component}")]
    SingularInnovation { component: usize },

    #[error("singular current-state covariance for component {component}")]
    SingularStateCovariance { component: usize },

    #[error("non-finite weight {weight} at component {component}")]
    NonFiniteWeight { component: usize, weight: f64 },

    #[error("scan {scan}: {source}")]
    AtScan {
        scan: usize,
        #[source]
        source: Box<TphdError>,
    },

    #[error("run {run}: {source}")]
    AtRun {
        run: usize,
        #[source]
        source: Box<TphdError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TphdError {
    pub fn at_scan(self, scan: usize) -> Self {
        TphdError::AtScan {
            scan,
            source: Box::new(self),
        }
    }

    pub fn at_run(self, run: usize) -> Self {
        TphdError::AtRun {
            run,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, TphdError>;
