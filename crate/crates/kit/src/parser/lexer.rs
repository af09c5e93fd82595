//! Tokenizer for the family-specification language.
//!
//! Produces a flat token stream with 1-based line/column spans. Lexical
//! problems (code E001) are reported as diagnostics while scanning
//! continues, so the parser still sees a usable stream and can surface
//! later errors in the same run.

use crate::diag::{Code, Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Int { value: i64, raw: String },
    Date(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
}

impl TokenKind {
    /// Short rendering for "expected X, found Y" messages.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Str(_) => "a string".into(),
            TokenKind::Int { raw, .. } => format!("`{raw}`"),
            TokenKind::Date(raw) => format!("`{raw}`"),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

pub struct Lexed {
    pub tokens: Vec<Token>,
    pub diagnostics: Vec<Diagnostic>,
    /// Zero-width span just past the last character, for end-of-file
    /// diagnostics.
    pub eof_span: SourceSpan,
}

pub fn lex(source: &str, file: &str) -> Lexed {
    Scanner::new(source, file).run()
}

struct Scanner<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: &'a str,
    tokens: Vec<Token>,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Scanner<'a> {
    fn new(source: &str, file: &'a str) -> Scanner<'a> {
        Scanner {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            file,
            tokens: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn span_from(&self, start: (u32, u32)) -> SourceSpan {
        SourceSpan::new(self.file, start.0, start.1, self.line, self.col)
    }

    fn error(&mut self, span: SourceSpan, message: impl Into<String>) {
        self.diagnostics
            .push(Diagnostic::new(Code::E001, message, span));
    }

    fn push(&mut self, kind: TokenKind, start: (u32, u32)) {
        let span = self.span_from(start);
        self.tokens.push(Token { kind, span });
    }

    fn run(mut self) -> Lexed {
        while let Some(c) = self.peek() {
            let start = self.mark();
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '/' if self.peek2() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '{' => {
                    self.bump();
                    self.push(TokenKind::LBrace, start);
                }
                '}' => {
                    self.bump();
                    self.push(TokenKind::RBrace, start);
                }
                '(' => {
                    self.bump();
                    self.push(TokenKind::LParen, start);
                }
                ')' => {
                    self.bump();
                    self.push(TokenKind::RParen, start);
                }
                ':' => {
                    self.bump();
                    self.push(TokenKind::Colon, start);
                }
                ',' => {
                    self.bump();
                    self.push(TokenKind::Comma, start);
                }
                '"' => self.scan_string(start),
                c if c.is_ascii_alphabetic() => self.scan_ident(start),
                c if c.is_ascii_digit() => self.scan_number(start, false),
                '+' | '-' if self.peek2().is_some_and(|d| d.is_ascii_digit()) => {
                    self.scan_number(start, true)
                }
                c => {
                    self.bump();
                    let span = self.span_from(start);
                    self.error(span, format!("unexpected character `{c}`"));
                }
            }
        }
        let eof_span = SourceSpan::new(self.file, self.line, self.col, self.line, self.col);
        Lexed {
            tokens: self.tokens,
            diagnostics: self.diagnostics,
            eof_span,
        }
    }

    fn scan_ident(&mut self, start: (u32, u32)) {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        self.push(TokenKind::Ident(text), start);
    }

    /// Scans an integer, or a date when an unsigned digit run is followed
    /// by `-` and more digits (`2014-05`, `2014-05-03`).
    fn scan_number(&mut self, start: (u32, u32), signed: bool) {
        let mut raw = String::new();
        if signed {
            raw.push(self.bump().expect("sign present"));
        }
        self.scan_digits(&mut raw);
        let date_follows =
            |s: &Scanner| s.peek() == Some('-') && s.peek2().is_some_and(|d| d.is_ascii_digit());
        if !signed && date_follows(self) {
            raw.push(self.bump().expect("dash present"));
            self.scan_digits(&mut raw);
            if date_follows(self) {
                raw.push(self.bump().expect("dash present"));
                self.scan_digits(&mut raw);
            }
            self.push(TokenKind::Date(raw), start);
            return;
        }
        match raw.parse::<i64>() {
            Ok(value) => self.push(TokenKind::Int { value, raw }, start),
            Err(_) => {
                let span = self.span_from(start);
                self.error(span, format!("integer literal `{raw}` is too large"));
            }
        }
    }

    fn scan_digits(&mut self, raw: &mut String) {
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                raw.push(c);
                self.bump();
            } else {
                break;
            }
        }
    }

    fn scan_string(&mut self, start: (u32, u32)) {
        self.bump();
        let mut value = String::new();
        loop {
            match self.peek() {
                None => {
                    let span = self.span_from(start);
                    self.error(span, "unterminated string".to_string());
                    break;
                }
                Some('\n') => {
                    let span = self.span_from(start);
                    self.error(span, "unterminated string (strings may not span lines; use \\n)".to_string());
                    break;
                }
                Some('"') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    let esc_start = self.mark();
                    self.bump();
                    match self.peek() {
                        Some('"') => {
                            value.push('"');
                            self.bump();
                        }
                        Some('\\') => {
                            value.push('\\');
                            self.bump();
                        }
                        Some('n') => {
                            value.push('\n');
                            self.bump();
                        }
                        other => {
                            if let Some(c) = other {
                                if c != '\n' {
                                    self.bump();
                                }
                            }
                            let span = self.span_from(esc_start);
                            let shown = other.map_or("end of file".to_string(), |c| {
                                if c == '\n' {
                                    "end of line".to_string()
                                } else {
                                    format!("`\\{c}`")
                                }
                            });
                            self.error(span, format!("invalid escape {shown} (valid: \\\" \\\\ \\n)"));
                        }
                    }
                }
                Some(c) => {
                    value.push(c);
                    self.bump();
                }
            }
        }
        self.push(TokenKind::Str(value), start);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(source: &str) -> (Vec<TokenKind>, Vec<Diagnostic>) {
        let lexed = lex(source, "t.fam");
        (
            lexed.tokens.into_iter().map(|t| t.kind).collect(),
            lexed.diagnostics,
        )
    }

    #[test]
    fn scans_punctuation_idents_and_literals() {
        let (toks, diags) = kinds(r#"family F-0 { date: 2014-05 impact internal: -2 }"#);
        assert!(diags.is_empty());
        assert_eq!(
            toks,
            vec![
                TokenKind::Ident("family".into()),
                TokenKind::Ident("F-0".into()),
                TokenKind::LBrace,
                TokenKind::Ident("date".into()),
                TokenKind::Colon,
                TokenKind::Date("2014-05".into()),
                TokenKind::Ident("impact".into()),
                TokenKind::Ident("internal".into()),
                TokenKind::Colon,
                TokenKind::Int { value: -2, raw: "-2".into() },
                TokenKind::RBrace,
            ]
        );
    }

    #[test]
    fn string_escapes_decode() {
        let (toks, diags) = kinds(r#""a\"b\\c\nd""#);
        assert!(diags.is_empty());
        assert_eq!(toks, vec![TokenKind::Str("a\"b\\c\nd".into())]);
    }

    #[test]
    fn bad_escape_is_lexical_error() {
        let (_, diags) = kinds(r#""a\qb""#);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::E001);
        assert_eq!(diags[0].span.start_col, 3);
    }

    #[test]
    fn unterminated_string_is_lexical_error() {
        let (_, diags) = kinds("site: \"oops\nnext");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::E001);
    }

    #[test]
    fn stray_character_is_lexical_error() {
        let (toks, diags) = kinds("a @ b");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::E001);
        assert_eq!(toks.len(), 2);
    }

    #[test]
    fn comments_run_to_end_of_line() {
        let (toks, diags) = kinds("a // b \" { \nc");
        assert!(diags.is_empty());
        assert_eq!(
            toks,
            vec![TokenKind::Ident("a".into()), TokenKind::Ident("c".into())]
        );
    }

    #[test]
    fn positions_are_one_based_lines_and_columns() {
        let lexed = lex("ab\n  cd", "t.fam");
        assert_eq!(lexed.tokens[0].span.start_line, 1);
        assert_eq!(lexed.tokens[0].span.start_col, 1);
        assert_eq!(lexed.tokens[1].span.start_line, 2);
        assert_eq!(lexed.tokens[1].span.start_col, 3);
        assert_eq!(lexed.eof_span.start_line, 2);
        assert_eq!(lexed.eof_span.start_col, 5);
    }

    #[test]
    fn crlf_counts_as_one_line_break() {
        let lexed = lex("a\r\nb", "t.fam");
        assert_eq!(lexed.tokens[1].span.start_line, 2);
        assert_eq!(lexed.tokens[1].span.start_col, 1);
    }

    #[test]
    fn dates_take_two_or_three_components() {
        let (toks, _) = kinds("2014 2014-05 2014-05-03");
        assert_eq!(
            toks,
            vec![
                TokenKind::Int { value: 2014, raw: "2014".into() },
                TokenKind::Date("2014-05".into()),
                TokenKind::Date("2014-05-03".into()),
            ]
        );
    }
}
