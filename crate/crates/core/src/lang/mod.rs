//! The `.ssm` modeling language.
//!
//! ```text
//! const dt = 10ms;
//! automaton A { states idle, busy; init idle; idle -> busy [go]; busy -> idle; idle -> idle [!go]; }
//! failure F per_time(1e-2/h);
//! hazard H = A.state == busy & F;
//! ```
//!
//! The full grammar is in `docs/grammar.ebnf`.

pub mod ast;
mod lexer;
mod parser;
mod print;
mod resolve;

use std::fmt;

pub use ast::{SourceModel, Span};
pub use print::print;

use crate::model::{Severity, SystemModel};

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: Span) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.span, self.message)
    }
}

/// Parses and resolves a model. Every error carries a source position.
pub fn parse(text: &str) -> Result<SourceModel, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let tokens = lexer::tokenize(text, &mut diags);
    let items = parser::Parser::new(tokens).items(&mut diags);
    if !diags.is_empty() {
        return Err(diags);
    }
    let src = SourceModel {
        text: text.to_string(),
        items,
    };
    resolve::resolve(&src)?;
    Ok(src)
}

/// Lowers a successfully parsed model. Per-demand failure modes are not yet
/// injected and all failure automata are in their qualitative form.
pub fn lower(src: &SourceModel) -> SystemModel {
    resolve::resolve(src).expect("parse() accepted this model")
}

/// `parse` followed by `lower`.
pub fn load(text: &str) -> Result<SystemModel, Vec<Diagnostic>> {
    parse(text).map(|src| lower(&src))
}
