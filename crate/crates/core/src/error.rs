use std::fmt;

use thiserror::Error;

/// Byte range into the source text, with the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },

    #[error("{span}: `{operator}` is not allowed in a {domain} model")]
    MixedTimeDomain {
        span: Span,
        operator: &'static str,
        domain: &'static str,
    },

    #[error("{span}: undeclared variable `{name}`")]
    UndeclaredVariable { span: Span, name: String },

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("unknown guard `{0}`")]
    UnknownGuard(String),

    #[error("guard `{0}` is not assigned by the mode")]
    UnassignedGuard(String),

    #[error("{count} guards declared, at most {max} can be enumerated")]
    TooManyGuards { count: usize, max: usize },

    #[error("matching is not complete")]
    NotCompleteMatching,

    #[error("no complete matching exists: the system is structurally singular")]
    NoCompleteMatching,

    #[error("no equation-complete matching exists: the system is overconstrained")]
    NoEquationCompleteMatching,

    #[error("variable `{0}` occurs in no equation and cannot be covered")]
    IsolatedVariable(String),

    #[error("offset fixpoint did not converge within {bound} iterations")]
    NonConvergence { bound: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("role partition: {0}")]
    InvalidRoles(String),

    #[error("models of the cascade do not share a variable universe")]
    InconsistentVariableUniverse,

    #[error("leading instances not determined by any array of order <= {k_max}")]
    NotDeterminedWithinBound { k_max: u32 },

    #[error("previous and next modes are identical")]
    SameMode,

    #[error("conflict at mode change cannot be resolved without retracting previous-instant equations: {0:?}")]
    CausalityViolation(Vec<String>),
}

impl Error {
    /// Errors that signal a broken internal invariant rather than a bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::ContractViolation(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
