//! Source spans and compile-time diagnostics shared by every compiler stage.

use std::fmt;

/// A region of source text. Offsets are bytes; `line` and `col` are 1-based
/// and refer to `start`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span { start, end, line, col }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        let (first, _) = if self.start <= other.start { (self, other) } else { (other, self) };
        Span {
            start: first.start,
            end: self.end.max(other.end),
            line: first.line,
            col: first.col,
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Diagnostic categories. Each maps onto a stable machine-readable code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Syntax,
    NotDefined,
    NotDefinitelyAssigned,
    TypeMismatch,
    BranchTypeConflict,
    LinearityCopy,
    LinearityDiscard,
    LinearityConditionalUse,
    SignatureMissing,
    PyBindingMissing,
    PyUsesGuppyVar,
    UnsupportedFeature,
    Arity,
    OverflowLiteral,
}

impl Category {
    pub const ALL: [Category; 14] = [
        Category::Syntax,
        Category::NotDefined,
        Category::NotDefinitelyAssigned,
        Category::TypeMismatch,
        Category::BranchTypeConflict,
        Category::LinearityCopy,
        Category::LinearityDiscard,
        Category::LinearityConditionalUse,
        Category::SignatureMissing,
        Category::PyBindingMissing,
        Category::PyUsesGuppyVar,
        Category::UnsupportedFeature,
        Category::Arity,
        Category::OverflowLiteral,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Category::Syntax => "SYN001",
            Category::UnsupportedFeature => "SYN002",
            Category::NotDefined => "DEF001",
            Category::NotDefinitelyAssigned => "DEF002",
            Category::TypeMismatch => "TYP001",
            Category::BranchTypeConflict => "TYP002",
            Category::SignatureMissing => "TYP003",
            Category::LinearityCopy => "LIN001",
            Category::LinearityDiscard => "LIN002",
            Category::LinearityConditionalUse => "LIN003",
            Category::PyUsesGuppyVar => "PY001",
            Category::PyBindingMissing => "PY002",
            Category::Arity => "ARI001",
            Category::OverflowLiteral => "OVF001",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Syntax => "syntax",
            Category::NotDefined => "not-defined",
            Category::NotDefinitelyAssigned => "not-definitely-assigned",
            Category::TypeMismatch => "type-mismatch",
            Category::BranchTypeConflict => "branch-type-conflict",
            Category::LinearityCopy => "linearity-copy",
            Category::LinearityDiscard => "linearity-discard",
            Category::LinearityConditionalUse => "linearity-conditional-use",
            Category::SignatureMissing => "signature-missing",
            Category::PyBindingMissing => "py-binding-missing",
            Category::PyUsesGuppyVar => "py-uses-guppy-var",
            Category::UnsupportedFeature => "unsupported-feature",
            Category::Arity => "arity",
            Category::OverflowLiteral => "overflow-literal",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub category: Category,
    pub message: String,
    pub span: Span,
    pub notes: Vec<(Span, String)>,
}

impl Diagnostic {
    pub fn new(category: Category, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            category,
            message: message.into(),
            span,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, span: Span, note: impl Into<String>) -> Self {
        self.notes.push((span, note.into()));
        self
    }

    pub fn code(&self) -> &'static str {
        self.category.code()
    }

    /// `file:line:col: error[CODE]: message`, followed by one line per note.
    pub fn render(&self, file: &str) -> String {
        let mut out = format!(
            "{}:{}:{}: error[{}]: {}",
            file,
            self.span.line,
            self.span.col,
            self.code(),
            self.message
        );
        for (span, note) in &self.notes {
            out.push_str(&format!("\n{}:{}:{}: note: {}", file, span.line, span.col, note));
        }
        out
    }

    pub fn to_json(&self, file: &str) -> serde_json::Value {
        let span_json = |s: &Span| {
            serde_json::json!({
                "start": s.start,
                "end": s.end,
                "line": s.line,
                "column": s.col,
            })
        };
        serde_json::json!({
            "file": file,
            "code": self.code(),
            "category": self.category.name(),
            "message": self.message,
            "span": span_json(&self.span),
            "notes": self.notes.iter().map(|(s, n)| serde_json::json!({
                "span": span_json(s),
                "message": n,
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: error[{}]: {}",
            self.span.line,
            self.span.col,
            self.code(),
            self.message
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn codes_are_unique_and_namespaced() {
        let codes: HashSet<_> = Category::ALL.iter().map(|c| c.code()).collect();
        assert_eq!(codes.len(), Category::ALL.len());
        for code in codes {
            assert!(["SYN", "TYP", "DEF", "LIN", "PY", "ARI", "OVF"]
                .iter()
                .any(|p| code.starts_with(p)));
        }
    }

    #[test]
    fn render_human() {
        let d = Diagnostic::new(Category::LinearityCopy, Span::new(10, 11, 3, 14), "`q` used twice")
            .with_note(Span::new(7, 8, 3, 11), "first use here");
        assert_eq!(
            d.render("a.gpy"),
            "a.gpy:3:14: error[LIN001]: `q` used twice\na.gpy:3:11: note: first use here"
        );
    }
}
