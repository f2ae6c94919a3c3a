use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Position of a token in the query text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Every failure the engine can report. Each variant maps to a stable,
/// machine-readable code via [`Error::code`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("the OR operation is not allowed (at {pos})")]
    OrNotAllowed { pos: Pos },
    #[error("unknown function `{name}`")]
    UnknownFunction { name: String },
    #[error("function `{name}` expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("inequality on `{expr}` must be bounded on both sides")]
    RangeUnbounded { expr: String },
    #[error("range [{lower}, {upper}) is not snapped; try {}", suggestions.join(" or "))]
    RangeNotSnapped {
        lower: String,
        upper: String,
        suggestions: Vec<String>,
    },
    #[error("negative condition `{cond}` must be clear")]
    UnclearNegative { cond: String },
    #[error("condition `{cond}` must be clear")]
    UnclearCondition { cond: String },
    #[error("HAVING requires a GROUP BY on the uid column")]
    HavingRequiresUidGrouping,
    #[error("a grouped subquery must group by the uid column only")]
    SubqueryGrouping,
    #[error("JOIN is not supported")]
    JoinNotSupported,
    #[error("column-to-column comparison `{cond}` is not allowed")]
    ColumnComparison { cond: String },
    #[error("subqueries may only be nested one level deep")]
    SubqueryDepth,
    #[error("unknown column `{name}`")]
    UnknownColumn { name: String },
    #[error("unknown table `{name}`")]
    UnknownTable { name: String },
    #[error("type mismatch: {message}")]
    TypeMismatch { message: String },
    #[error("`{expr}` must appear in GROUP BY or inside an aggregate")]
    NotGrouped { expr: String },
    #[error("invalid aggregate use: {message}")]
    Aggregate { message: String },
    #[error("floated data for `{column}` is required but missing")]
    MissingFloat { column: String },
    #[error("row {row}, column `{column}`: {message}")]
    CsvParse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("uid column `{name}` not found in schema")]
    MissingUidColumn { name: String },
    #[error("row {row}: uid cell is empty")]
    EmptyUid { row: usize },
    #[error("schema error: {message}")]
    Schema { message: String },
    #[error("config error: {message}")]
    Config { message: String },
    #[error("io error: {message}")]
    Io { message: String },
    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },
    #[error("query failed: {message}")]
    Runtime { message: String },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "SYNTAX_ERROR",
            Error::OrNotAllowed { .. } => "OR_NOT_ALLOWED",
            Error::UnknownFunction { .. } => "UNKNOWN_FUNCTION",
            Error::Arity { .. } => "BAD_ARITY",
            Error::RangeUnbounded { .. } => "RANGE_UNBOUNDED",
            Error::RangeNotSnapped { .. } => "RANGE_NOT_SNAPPED",
            Error::UnclearNegative { .. } => "UNCLEAR_NEGATIVE",
            Error::UnclearCondition { .. } => "UNCLEAR_CONDITION",
            Error::HavingRequiresUidGrouping => "HAVING_WITHOUT_UID_GROUPING",
            Error::SubqueryGrouping => "SUBQUERY_GROUPING",
            Error::JoinNotSupported => "JOIN_NOT_SUPPORTED",
            Error::ColumnComparison { .. } => "COLUMN_COMPARISON",
            Error::SubqueryDepth => "SUBQUERY_DEPTH",
            Error::UnknownColumn { .. } => "UNKNOWN_COLUMN",
            Error::UnknownTable { .. } => "UNKNOWN_TABLE",
            Error::TypeMismatch { .. } => "TYPE_MISMATCH",
            Error::NotGrouped { .. } => "NOT_GROUPED",
            Error::Aggregate { .. } => "AGGREGATE_MISUSE",
            Error::MissingFloat { .. } => "MISSING_FLOAT",
            Error::CsvParse { .. } => "CSV_PARSE",
            Error::MissingUidColumn { .. } => "MISSING_UID_COLUMN",
            Error::EmptyUid { .. } => "EMPTY_UID",
            Error::Schema { .. } => "SCHEMA_ERROR",
            Error::Config { .. } => "CONFIG_ERROR",
            Error::Io { .. } => "IO_ERROR",
            Error::InvalidArgument { .. } => "INVALID_ARGUMENT",
            Error::Runtime { .. } => "RUNTIME_ERROR",
        }
    }

    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Error {
        Error::Syntax {
            pos,
            message: message.into(),
        }
    }

    pub(crate) fn type_mismatch(message: impl Into<String>) -> Error {
        Error::TypeMismatch {
            message: message.into(),
        }
    }

    pub(crate) fn runtime(message: impl Into<String>) -> Error {
        Error::Runtime {
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io {
            message: err.to_string(),
        }
    }
}
