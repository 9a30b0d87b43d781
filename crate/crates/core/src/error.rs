use thiserror::Error;

/// Coarse error category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or arguments supplied by the caller.
    Config,
    /// Input data is missing, malformed, or violates a data invariant.
    Data,
    /// A model or fold setup is degenerate (single class, zero variance, ...).
    Degenerate,
    /// A search or sampling procedure could not produce a result.
    Infeasible,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: cannot parse '{value}' in column '{column}' as a number")]
    ParseCell { row: usize, column: String, value: String },
    #[error("duplicate sample id {0}")]
    DuplicateId(i64),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("sample {id} at ({x}, {y}) falls outside the raster extent")]
    OutOfBounds { id: i64, x: f64, y: f64 },
    #[error("sample {id}: band '{band}' is NODATA at ({x}, {y})")]
    NodataAtSample { id: i64, band: String, x: f64, y: f64 },
    #[error("raster format error: {0}")]
    RasterFormat(String),
    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },
    #[error("unknown band '{0}' in expression")]
    UnknownBand(String),
    #[error("band '{0}' has zero variance")]
    DegenerateBand(String),
    #[error("feature mismatch: missing {0:?}")]
    FeatureMismatch(Vec<String>),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate response: {0}")]
    DegenerateResponse(String),
    #[error("fold {0} has a degenerate training partition: {1}")]
    FoldDegeneracy(usize, String),
    #[error("degenerate spatial partition: {0}")]
    DegeneratePartition(String),
    #[error("metric '{0}' is undefined for this input")]
    UndefinedMetric(&'static str),
    #[error("no fold produced a defined metric value")]
    UndefinedAggregate,
    #[error("feature selection failed: {0}")]
    SelectionFailure(String),
    #[error("sampling design infeasible: {0}")]
    DesignInfeasible(String),
    #[error("degenerate autocorrelation range: {0}")]
    DegenerateRange(String),
    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Argument(_) | Config(_) | UnknownStrategy(_) => ErrorKind::Config,
            MissingColumn(_) | ParseCell { .. } | DuplicateId(_) | Validation(_)
            | OutOfBounds { .. } | NodataAtSample { .. } | RasterFormat(_)
            | Expression { .. } | UnknownBand(_) | Io { .. } | Json(_) => ErrorKind::Data,
            DegenerateBand(_) | FeatureMismatch(_) | DegenerateResponse(_)
            | FoldDegeneracy(..) | DegeneratePartition(_) | UndefinedMetric(_)
            | UndefinedAggregate => ErrorKind::Degenerate,
            SelectionFailure(_) | DesignInfeasible(_) | DegenerateRange(_) => {
                ErrorKind::Infeasible
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
