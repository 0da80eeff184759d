//! Model formats: SpaceEx-style XML, key/value config, Flow*-style text and
//! canonical JSON.

pub mod config;
pub mod expr;
pub mod flowstar;
pub mod fmt;
pub mod json;
pub mod spaceex;

use thiserror::Error;

use crate::ir::{HybridAutomaton, InitialCondition, ReachSettings, ValidationReport};

pub use config::{emit_config, parse_config, Config, ConfigError};
pub use expr::{parse_condition, parse_expression, Expr, ExprError, ExprKind};
pub use flowstar::emit_flowstar;
pub use json::{read_json, write_json};
pub use spaceex::{emit_spaceex, parse_spaceex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Spaceex,
    Json,
    Builder,
}

/// Automaton plus everything needed to analyse it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub automaton: HybridAutomaton,
    pub settings: ReachSettings,
    pub initial: InitialCondition,
    pub source_format: SourceFormat,
}

impl ModelBundle {
    /// Checks the cross-references between settings, initial set and automaton.
    pub fn check(&self) -> Result<(), ModelError> {
        let aut = &self.automaton;
        let report = crate::ir::validate(aut);
        if !report.is_empty() {
            return Err(ModelError::Invalid(report));
        }
        self.settings.check().map_err(ModelError::Settings)?;
        let n = aut.vars.n();
        if aut.location(&self.initial.location).is_none() {
            return Err(ModelError::Settings(format!(
                "initial location `{}` does not exist",
                self.initial.location
            )));
        }
        if self.initial.intervals.len() != n || self.initial.intervals.iter().any(|iv| iv.is_empty()) {
            return Err(ModelError::Settings(
                "initial box must give one nonempty interval per state variable".into(),
            ));
        }
        if let Some(f) = &self.settings.forbidden {
            if f.constraints.iter().any(|c| c.coeffs.len() != n) {
                return Err(ModelError::Settings("forbidden condition has wrong dimension".into()));
            }
        }
        for v in [&self.settings.output_vars.0, &self.settings.output_vars.1] {
            if aut.vars.state_index(v).is_none() {
                return Err(ModelError::Settings(format!(
                    "output variable `{v}` is not a state variable"
                )));
            }
        }
        Ok(())
    }
}

/// Line and column (both 1-based) inside a source file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TextPos {
    pub line: usize,
    pub col: usize,
}

impl TextPos {
    pub fn of_offset(text: &str, offset: usize) -> Self {
        let offset = offset.min(text.len());
        let before = &text.as_bytes()[..offset];
        let line = before.iter().filter(|b| **b == b'\n').count() + 1;
        let col = offset - before.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1) + 1;
        Self { line, col }
    }
}

impl std::fmt::Display for TextPos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{at}: malformed XML: {msg}")]
    XmlMalformed { at: TextPos, msg: String },
    #[error("{at}: unsupported feature: {msg}")]
    UnsupportedFeature { at: TextPos, msg: String },
    #[error("{at}: {msg}")]
    Structure { at: TextPos, msg: String },
    #[error("{at}: in {context}: {source}")]
    Expression {
        at: TextPos,
        context: String,
        source: ExprError,
    },
    #[error("automaton is not well-formed:\n{0}")]
    Invalid(ValidationReport),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid settings: {0}")]
    Settings(String),
}
