use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Moment or probability estimates admit no real solution of the
    /// r-recovery quadratic.
    #[error("inconsistent statistics: discriminant {discriminant:.3e} is negative")]
    InconsistentStatistics { discriminant: f64 },

    #[error("ill-conditioned {what}: magnitude {value:.3e} below threshold {threshold:.1e}")]
    IllConditioned {
        what: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("indeterminate sign of v: argument {value:.3e} below threshold {threshold:.1e}")]
    IndeterminateSign { value: f64, threshold: f64 },

    #[error("singular geometry: 1 + cos(dphi_1m1) = {value:.3e}; choose another time interval")]
    SingularGeometry { value: f64 },

    #[error(
        "w-system near singular (condition {condition:.3e} > {bound:.1e}): \
         the two w-step distributions yield statistics that are too similar"
    )]
    NearSingularSystem { condition: f64, bound: f64 },

    #[error("frequency estimate requested from an empty accumulator")]
    EmptyAccumulator,

    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
