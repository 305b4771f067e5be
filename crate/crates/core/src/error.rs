use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no probability structure: interval `[{lo}, {hi}]` is epistemic only")]
    NoProbabilityStructure { lo: f64, hi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidSpec(String),

    #[error("taxonomy error: {0}")]
    Taxonomy(String),

    #[error("convergence criterion undefined: {0}")]
    CriterionUndefined(String),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("inconsistent effects for input {input}: mu* = 0 but sigma = {sigma}")]
    InconsistentEffects { input: usize, sigma: f64 },

    #[error("{metric} undefined for class {class}: zero denominator")]
    UndefinedMetric { metric: &'static str, class: usize },

    #[error("no class has a defined precision")]
    NoDefinedPrecision,

    #[error("divergence is infinite: q has mass where p has none (index {index})")]
    DivergenceInfinite { index: usize },

    #[error("support mismatch: {left} vs {right} outcomes")]
    SupportMismatch { left: usize, right: usize },

    #[error("cannot condition on a null event: evidence is zero")]
    ConditioningOnNull,

    #[error("non-monotone convergence: f1-f2 = {d21}, f2-f3 = {d32}")]
    NonMonotoneConvergence { d21: f64, d32: f64 },

    #[error("degenerate grid study: f2 == f3")]
    ZeroDifference,

    #[error("invalid grid study: {0}")]
    GridStudy(String),

    #[error("nothing to optimize: the study has no epistemic parameters")]
    NothingToOptimize,

    #[error("evaluation failed at {context}: {message}")]
    Evaluation { context: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("inconsistent dataset: {0}")]
    Consistency(String),

    #[error("shape error: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn eval(context: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Evaluation {
            context: context.into(),
            message: message.to_string(),
        }
    }

    /// Prefixes an evaluation context, flattening nested evaluation errors.
    pub(crate) fn within(self, context: impl std::fmt::Display) -> Self {
        match self {
            Error::Evaluation { context: inner, message } => Error::eval(format!("{context}, {inner}"), message),
            other => Error::eval(context.to_string(), other),
        }
    }

    pub(crate) fn at_path(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Error::Path { path, source }
    }
}
