//! The `.stpa` project format.
//!
//! A project file is a sequence of top-level blocks (`accident`, `hazard`,
//! `controller`, `variable`, `action`, `uca`, `ssr`, `rule`, `hazard-rule`,
//! `statemachine`, `concretize`). Parsing recovers at the next block keyword
//! that starts a line, so one pass reports every broken block. The grammar is
//! documented in `docs/dsl.md`.

mod lexer;
mod parser;
mod render;

pub use lexer::{tokenize, Tok, Token};
pub use parser::{parse_guard, parse_project, parse_project_file, parse_transition, TransitionDecl};
pub use render::render_project;

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    pub fn expecting(mut self, expected: &[&str]) -> Self {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.span.file, self.span.line, self.span.column, self.message
        )?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
