use alloc::string::String;

use super::ast::Span;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
}

impl SyntaxError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
        }
    }
}

/// Errors raised while reading a program.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unresolved identifier `{name}` at {span}")]
    Unresolved { name: String, span: Span },
    #[error("type mismatch at {span}: {message}")]
    Type { span: Span, message: String },
    #[error("{message} at {span}")]
    Declaration { span: Span, message: String },
}

impl LangError {
    pub fn span(&self) -> Span {
        match self {
            LangError::Syntax(e) => e.span,
            LangError::Unresolved { span, .. }
            | LangError::Type { span, .. }
            | LangError::Declaration { span, .. } => *span,
        }
    }
}

/// Errors raised while reading a `.tests` file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuiteError {
    #[error("line {line}: malformed test: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: test `{name}` passes {found} arguments but main takes {expected}")]
    Arity {
        line: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: test `{name}` argument {index}: expected {expected}, found {found}")]
    ArgType {
        line: usize,
        name: String,
        index: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: duplicate test name `{name}`")]
    Duplicate { line: usize, name: String },
}
