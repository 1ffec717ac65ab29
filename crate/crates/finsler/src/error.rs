use exprlang::{EvalError, ParseError, TableError};
use thiserror::Error;

use crate::manifold::TangentPoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error("manifest syntax error at {line}:{col}: {msg}")]
    ManifestSyntax { line: usize, col: usize, msg: String },
    #[error("manifest is missing required field `{0}`")]
    MissingField(String),
    #[error("manifest field `{field}`: {msg}")]
    InvalidField { field: String, msg: String },
    #[error("expression `{field}`: {source}")]
    Expr {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("dimension must be at least 2 (got {0})")]
    Dimension(usize),
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("evaluation failed at {point}: {source}")]
    Eval {
        point: TangentPoint,
        #[source]
        source: EvalError,
    },
    #[error("singular metric (det g = {det:e}) at {point}")]
    SingularMetric { det: f64, point: TangentPoint },
    #[error("{0} requires a Finsler function (kind = finsler)")]
    NotFinsler(&'static str),
    #[error("{0}")]
    Signature(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{0}")]
    Unsupported(String),
    #[error("integration: {0}")]
    Integration(String),
    #[error("internal consistency violation: {0}")]
    Consistency(String),
}
