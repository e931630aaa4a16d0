use thiserror::Error;

/// Errors produced anywhere in the solver toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpnError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),

    /// A stage would exceed its configured memory or time budget.
    #[error("resource limit exceeded in {stage}: {detail}")]
    Resource { stage: &'static str, detail: String },

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),
}

impl LpnError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LpnError::InvalidInput(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        LpnError::InfeasiblePlan(msg.into())
    }

    pub(crate) fn parse(line: usize, detail: impl Into<String>) -> Self {
        LpnError::Parse {
            line,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, LpnError>;
