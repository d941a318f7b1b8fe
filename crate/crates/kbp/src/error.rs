use std::fmt;

use thiserror::Error;

/// One rule violation found by static validation.
#[derive(Debug, Clone)]
pub struct Violation {
    pub rule: &'static str,
    pub message: String,
    /// 1-based line/column when the violation has a source location.
    pub at: Option<(usize, usize)>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.at {
            Some((line, col)) => write!(f, "{}:{}: [{}] {}", line, col, self.rule, self.message),
            None => write!(f, "[{}] {}", self.rule, self.message),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum KbpError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("{msg}")]
    Elaboration { msg: String },

    #[error("validation failed:\n{0}")]
    Validation(ValidationReport),

    #[error("{0}")]
    Synthesis(String),

    #[error("{0}")]
    Check(String),

    #[error("{0}")]
    Oracle(String),

    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl KbpError {
    pub fn elab(source: &str, offset: usize, msg: impl fmt::Display) -> KbpError {
        let (line, col) = crate::lang::lexer::line_col(source, offset);
        KbpError::Elaboration { msg: format!("{line}:{col}: {msg}") }
    }
}
