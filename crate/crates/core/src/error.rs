use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("basis {0:?} is singular")]
    SingularBasis(Vec<usize>),
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("start basis is not optimal for the starting objective")]
    NotOptimalStart,
    #[error("degenerate pivot: {0}")]
    DegeneratePivot(String),
    #[error("pivot limit of {0} exceeded")]
    MaxPivotsExceeded(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("leading objective coordinate is zero")]
    ZeroLeadingObjective,
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("shape is rank deficient")]
    RankDeficientShape,
    #[error("point lies outside the convex hull of the shape")]
    OutsideHull,
    #[error("no successful attempt within {0} restarts")]
    RestartExhausted(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by a measure-zero degenerate draw; harnesses
    /// resample on these instead of reporting them.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::SingularBasis(_)
                | Error::DegenerateInstance(_)
                | Error::DegeneratePivot(_)
                | Error::DegenerateConfiguration(_)
                | Error::NotOptimalStart
                | Error::MaxPivotsExceeded(_)
        )
    }
}
