use thiserror::Error;

use crate::mdp::Diagnostic;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("undeclared symbol `{name}` at line {line}")]
    UndeclaredSymbol { name: String, line: usize },
    #[error("duplicate declaration of {what} at line {line}")]
    DuplicateDeclaration { what: String, line: usize },
    #[error("model failed validation: {}", format_diagnostics(.0))]
    Validation(Vec<Diagnostic>),
    #[error("unknown observation `{name}` at trace position {position}")]
    UnknownObservation { name: String, position: usize },
    #[error("empty trace")]
    EmptyTrace,
    #[error("trace has probability zero{}", position_suffix(.at))]
    TraceImpossible { at: Option<usize> },
    #[error("step {step} exceeded the time limit")]
    Timeout { step: usize },
    #[error("instance too large for enumeration ({count} exceeds cap {cap})")]
    InstanceTooLarge { count: u128, cap: u128 },
    #[error("interval iteration did not close the gap (last gap {gap:e})")]
    NumericPrecision { gap: f64 },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("invalid risk specification: {0}")]
    InvalidRiskSpec(String),
    #[error("session is closed after an earlier failure")]
    SessionClosed,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn position_suffix(at: &Option<usize>) -> String {
    at.map(|i| format!(" at observation {i}")).unwrap_or_default()
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
