//! Source spans and positioned diagnostics shared by the parser, the
//! semantic validator, and the JSON importer.

use std::fmt;

/// A region of a source file, 1-based, inclusive on both ends.
///
/// Columns count characters, not bytes. Values produced outside of parsing
/// (hand-built models, JSON imports) carry a synthetic span whose file name
/// identifies the source but whose coordinates are all 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(
        file: impl Into<String>,
        start_line: u32,
        start_col: u32,
        end_line: u32,
        end_col: u32,
    ) -> Self {
        debug_assert!(
            (start_line, start_col) <= (end_line, end_col),
            "span start must not follow its end"
        );
        SourceSpan {
            file: file.into(),
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    /// Placeholder span for values that did not come from a parsed file.
    pub fn synthetic(file: impl Into<String>) -> Self {
        SourceSpan::new(file, 1, 1, 1, 1)
    }

    /// Smallest span covering both `self` and `other`.
    pub fn merge(&self, other: &SourceSpan) -> SourceSpan {
        let (sl, sc) = (self.start_line, self.start_col).min((other.start_line, other.start_col));
        let (el, ec) = (self.end_line, self.end_col).max((other.end_line, other.end_col));
        SourceSpan::new(self.file.clone(), sl, sc, el, ec)
    }

    fn order_key(&self) -> (&str, u32, u32, u32, u32) {
        (
            &self.file,
            self.start_line,
            self.start_col,
            self.end_line,
            self.end_col,
        )
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// Every diagnostic code the toolchain can emit.
///
/// E0xx are syntax-level (lexer, parser, file access), E1xx/W2xx are
/// semantic rules over a parsed corpus, and E3xx are JSON import failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    /// Lexical error: bad escape, unterminated string, stray character.
    E001,
    /// Unexpected token.
    E002,
    /// Duplicate field in a block.
    E003,
    /// Missing required field.
    E004,
    /// Value outside its domain (bad date, effect out of range, unknown keyword).
    E005,
    /// Unreadable input file.
    E010,
    /// Duplicate acronym across the corpus.
    E101,
    /// Base acronym does not resolve within the family.
    E102,
    /// Base-reference chain never reaches the original study.
    E103,
    /// Duplicate validity type among one change's impacts.
    E104,
    /// Impact effect outside [-3, +3].
    E105,
    /// Nonzero effect without a rationale.
    E106,
    /// Replication with an empty purposes list.
    E107,
    /// Replication dated earlier than its base study.
    W201,
    /// Change with no recorded validity impacts.
    W202,
    /// Replication with no changes.
    W203,
    /// Malformed JSON document.
    E301,
    /// Unsupported interchange schema version.
    E302,
    /// JSON field missing or of the wrong type.
    E303,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::E001 => "E001",
            Code::E002 => "E002",
            Code::E003 => "E003",
            Code::E004 => "E004",
            Code::E005 => "E005",
            Code::E010 => "E010",
            Code::E101 => "E101",
            Code::E102 => "E102",
            Code::E103 => "E103",
            Code::E104 => "E104",
            Code::E105 => "E105",
            Code::E106 => "E106",
            Code::E107 => "E107",
            Code::W201 => "W201",
            Code::W202 => "W202",
            Code::W203 => "W203",
            Code::E301 => "E301",
            Code::E302 => "E302",
            Code::E303 => "E303",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Code::W201 | Code::W202 | Code::W203 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One positioned finding, rendered as `FILE:LINE:COL: SEVERITY CODE: MESSAGE`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: Code,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    /// Severity is derived from the code.
    pub fn new(code: Code, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            severity: code.severity(),
            code,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} {}: {}",
            self.span, self.severity, self.code, self.message
        )
    }
}

/// True if any diagnostic in the slice is an error.
pub fn any_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Stable reporting order: by file, then span position, then code.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        a.span
            .order_key()
            .cmp(&b.span.order_key())
            .then_with(|| a.code.cmp(&b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}
