//! Source locations and diagnostics shared by the parser and the validator.

use std::fmt;

/// A 1-based position inside a model source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, line: usize, column: usize) -> Self {
        Self {
            file: file.into(),
            line: line.max(1),
            column: column.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Category of a named model element, used to look up source locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    System,
    Entity,
    Interface,
    Contract,
    Platform,
    Component,
    Application,
    Link,
    Module,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::System => "system",
            ElementKind::Entity => "entity",
            ElementKind::Interface => "interface",
            ElementKind::Contract => "contract",
            ElementKind::Platform => "platform",
            ElementKind::Component => "component",
            ElementKind::Application => "application",
            ElementKind::Link => "link",
            ElementKind::Module => "module",
        }
    }
}

/// A single finding. Parse diagnostics always carry a span; validation
/// diagnostics carry the offending element and get a span once located
/// against a [`SourceMap`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub span: Option<SourceSpan>,
    pub subject: Option<(ElementKind, String)>,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            span: None,
            subject: None,
        }
    }

    pub fn warning(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(code, message)
        }
    }

    pub fn at(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }

    pub fn about(mut self, kind: ElementKind, name: impl Into<String>) -> Self {
        self.subject = Some((kind, name.into()));
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.severity, self.code)?;
        if let Some(span) = &self.span {
            write!(f, " {span}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Where each named element was declared in the source text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    entries: std::collections::HashMap<(ElementKind, String), SourceSpan>,
}

impl SourceMap {
    pub fn insert(&mut self, kind: ElementKind, name: impl Into<String>, span: SourceSpan) {
        self.entries.entry((kind, name.into())).or_insert(span);
    }

    pub fn get(&self, kind: ElementKind, name: &str) -> Option<&SourceSpan> {
        self.entries.get(&(kind, name.to_string()))
    }

    /// Fills in missing spans from the element each diagnostic is about.
    pub fn locate(&self, diagnostics: &mut [Diagnostic]) {
        for d in diagnostics.iter_mut().filter(|d| d.span.is_none()) {
            if let Some((kind, name)) = &d.subject {
                d.span = self.get(*kind, name).cloned();
            }
        }
    }
}
