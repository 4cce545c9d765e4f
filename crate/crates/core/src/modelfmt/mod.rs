//! The `.iot` textual model language.
//!
//! A file is a sequence of top-level blocks (`system`, `entity`,
//! `interface`, `contract`, `cloud`, `fog`, `device`, `component`,
//! `application`, `link`). Attributes are `key = value`; values are numbers,
//! quoted strings, bare keywords, `[lists]`, `(lat, lon)` tuples, or data
//! source constructors such as `uniform(0, 30) seed 42`. `#` starts a line
//! comment. The full grammar is in `docs/model-language.md`.

mod ast;
mod condition;
mod decode;
mod lexer;
mod serialize;

use std::path::Path;

use thiserror::Error;

pub use condition::{parse_condition, parse_condition_syntax, ConditionError};
pub use serialize::serialize_model;

use crate::diag::{Diagnostic, SourceMap, SourceSpan};
use crate::model::{build_system, IoTSystemModel};

/// A model together with where its elements were declared.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub model: IoTSystemModel,
    pub sources: SourceMap,
}

pub const DEFAULT_FILE_NAME: &str = "<input>";

/// Parses model text; errors carry spans into `text`.
pub fn parse_model(text: &str) -> Result<IoTSystemModel, Vec<Diagnostic>> {
    parse_model_named(text, DEFAULT_FILE_NAME).map(|p| p.model)
}

pub fn parse_model_named(text: &str, file: &str) -> Result<ParsedModel, Vec<Diagnostic>> {
    let tokens = lexer::tokenize(text, file).map_err(|d| vec![d])?;
    let blocks = ast::parse_blocks(&tokens, file).map_err(|d| vec![d])?;
    let decoded = decode::decode(&blocks, file);
    if decoded.diagnostics.iter().any(Diagnostic::is_error) {
        return Err(decoded.diagnostics);
    }
    let sources = decoded.sources;
    match build_system(decoded.decls) {
        Ok(model) => Ok(ParsedModel { model, sources }),
        Err(errors) => Err(errors
            .into_iter()
            .map(|e| {
                let span = e
                    .span
                    .clone()
                    .or_else(|| sources.get(e.element, &e.owner).cloned())
                    .unwrap_or_else(|| SourceSpan::new(file, 1, 1));
                Diagnostic::error(e.code(), e.to_string()).at(span)
            })
            .collect()),
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{} error(s) in {path}", diagnostics.len())]
    Invalid {
        path: String,
        diagnostics: Vec<Diagnostic>,
    },
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ParsedModel, LoadError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: display.clone(),
        source,
    })?;
    parse_model_named(&text, &display).map_err(|diagnostics| LoadError::Invalid {
        path: display,
        diagnostics,
    })
}
