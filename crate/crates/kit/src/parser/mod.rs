//! Recursive-descent parser for the family-specification language.
//!
//! ```text
//! corpus      = { family } ;
//! family      = "family" ACRONYM "{" original { replication } "}" ;
//! original    = "original" "study" ACRONYM "{" fields goal "description" ":" STRING "}" ;
//! fields      = "site" ":" STRING "date" ":" DATE [ "report" ":" STRING ] [ "comments" ":" STRING ] ;
//! goal        = "goal" "{" ( "gqm" ":" STRING
//!             | "cause" ":" STRING "effect" ":" STRING "population" ":" STRING ) "}" ;
//! replication = "replication" ACRONYM "based" "on" ACRONYM "{"
//!               "kind" ":" ( "internal" | "external" ) fields
//!               "purposes" ":" purpose { "," purpose } { change } "}" ;
//! purpose     = "confirm" | "generalize" | "overcome" ;
//! change      = "change" STRING "{" "base" ":" STRING "replication" ":" STRING
//!               "purpose" ":" STRING "dimension" ":" dimension { impact }
//!               [ "comments" ":" STRING ] "}" ;
//! dimension   = "operationalization" "(" ( "treatments" | "metrics" | "measurement_procedures" ) ")"
//!             | "population" "(" STRING ")"
//!             | "protocol" "(" ( "experimental_design" | "experimental_material"
//!               | "experimental_guides" | "measuring_instruments" | "data_analysis_techniques" ) ")"
//!             | "experimenter" "(" ( "designer" | "trainer" | "monitor" | "measurer" | "analyst" ) ")"
//!             | "context" "(" STRING ")" ;
//! impact      = "impact" ( "conclusion" | "internal" | "construct" | "external" ) ":" INT
//!               [ "because" STRING ] ;
//! ```
//!
//! `STRING` is double-quoted with `\"`, `\\`, `\n` escapes; `DATE` is
//! `YYYY`, `YYYY-MM`, or `YYYY-MM-DD` unquoted; `ACRONYM` is a letter
//! followed by letters, digits, `_`, or `-`; `INT` is an optionally signed
//! decimal integer; `//` starts a line comment. Fields inside a block may
//! appear in any order; a repeated field is an error (E003).
//!
//! Parsing recovers at block boundaries so one run reports many errors. A
//! file yields its families only when it produced zero errors; a file with
//! errors contributes diagnostics alone.

mod lexer;

use std::path::PathBuf;

use crate::diag::{sort_diagnostics, Code, Diagnostic, SourceSpan};
use crate::model::{
    Acronym, Change, ChangeImpact, Corpus, Dimension, ExperimenterRole, Family, Goal,
    OperationalizationElement, OriginalStudy, ProtocolElement, Purpose, Replication,
    ReplicationKind, StudyCore, StudyDate, Validity,
};
use crate::par;

use lexer::{lex, Token, TokenKind};

/// An input held in memory, named for diagnostics.
#[derive(Debug, Clone)]
pub struct NamedSource {
    pub name: String,
    pub text: String,
}

impl NamedSource {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> NamedSource {
        NamedSource {
            name: name.into(),
            text: text.into(),
        }
    }
}

/// Parses one source text. Returns the families it defines when the text
/// is error-free, `None` otherwise; diagnostics are returned either way,
/// sorted by position.
pub fn parse(source: &str, file_name: &str) -> (Option<Corpus>, Vec<Diagnostic>) {
    let lexed = lex(source, file_name);
    let mut parser = Parser {
        tokens: lexed.tokens,
        pos: 0,
        eof_span: lexed.eof_span,
        diags: lexed.diagnostics,
    };
    let families = parser.corpus();
    let mut diags = parser.diags;
    sort_diagnostics(&mut diags);
    let corpus = if diags.iter().any(|d| d.is_error()) {
        None
    } else {
        Some(Corpus { families })
    };
    (corpus, diags)
}

/// Parses several in-memory sources, possibly in parallel, concatenating
/// the per-source results in input order. Sources with errors contribute
/// no families, only diagnostics.
pub fn parse_sources(sources: &[NamedSource]) -> (Corpus, Vec<Diagnostic>) {
    let parsed = par::map_ordered(sources, |s| parse(&s.text, &s.name));
    merge(parsed)
}

/// Reads and parses files, possibly in parallel, concatenating per-file
/// results in input order. An unreadable file is reported as E010.
pub fn parse_corpus(files: &[PathBuf]) -> (Corpus, Vec<Diagnostic>) {
    let parsed = par::map_ordered(files, |path| {
        let name = path.display().to_string();
        match std::fs::read_to_string(path) {
            Ok(text) => parse(&text, &name),
            Err(err) => {
                let diag = Diagnostic::new(
                    Code::E010,
                    format!("cannot read `{name}`: {err}"),
                    SourceSpan::synthetic(&name),
                );
                (None, vec![diag])
            }
        }
    });
    merge(parsed)
}

fn merge(parsed: Vec<(Option<Corpus>, Vec<Diagnostic>)>) -> (Corpus, Vec<Diagnostic>) {
    let mut corpus = Corpus::default();
    let mut diags = Vec::new();
    for (fragment, mut d) in parsed {
        if let Some(fragment) = fragment {
            corpus.families.extend(fragment.families);
        }
        diags.append(&mut d);
    }
    (corpus, diags)
}

/// Outcome of parsing one block.
enum Parsed<T> {
    /// The block parsed cleanly.
    Ok(T),
    /// The block was consumed through its closing brace but cannot be
    /// built (missing fields, bad values); the caller continues in place.
    Broken,
    /// The block structure itself is unusable; the caller resynchronizes.
    Lost,
}

/// A block field: whether its keyword appeared at all (for E004), and the
/// usable value if one parsed (a field can be present yet invalid).
struct Slot<T> {
    value: Option<T>,
    seen: bool,
}

impl<T> Default for Slot<T> {
    fn default() -> Self {
        Slot {
            value: None,
            seen: false,
        }
    }
}

impl<T> Slot<T> {
    /// Records an occurrence of the field's keyword; true when it is a
    /// duplicate.
    fn occur(&mut self) -> bool {
        let dup = self.seen;
        self.seen = true;
        dup
    }

    fn fill(&mut self, value: T) {
        if self.value.is_none() {
            self.value = Some(value);
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof_span: SourceSpan,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Ident(s)) => Some(s.as_str()),
            _ => None,
        }
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> SourceSpan {
        self.peek()
            .map_or_else(|| self.eof_span.clone(), |t| t.span.clone())
    }

    fn found(&self) -> String {
        self.peek()
            .map_or_else(|| "end of file".to_string(), |t| t.kind.describe())
    }

    fn error(&mut self, code: Code, message: impl Into<String>, span: SourceSpan) {
        self.diags.push(Diagnostic::new(code, message, span));
    }

    fn expected(&mut self, what: &str) {
        let span = self.here();
        let found = self.found();
        self.error(Code::E002, format!("expected {what}, found {found}"), span);
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<SourceSpan, ()> {
        if self.peek_ident() == Some(kw) {
            Ok(self.bump().expect("peeked").span)
        } else {
            self.expected(&format!("`{kw}`"));
            Err(())
        }
    }

    fn expect_colon(&mut self) -> Result<(), ()> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Colon)) {
            self.bump();
            Ok(())
        } else {
            self.expected("`:`");
            Err(())
        }
    }

    fn expect_lbrace(&mut self) -> Result<SourceSpan, ()> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LBrace)) {
            Ok(self.bump().expect("peeked").span)
        } else {
            self.expected("`{`");
            Err(())
        }
    }

    fn expect_lparen(&mut self) -> Result<(), ()> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
            self.bump();
            Ok(())
        } else {
            self.expected("`(`");
            Err(())
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ()> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::RParen)) {
            self.bump();
            Ok(())
        } else {
            self.expected("`)`");
            Err(())
        }
    }

    fn expect_string(&mut self, what: &str) -> Result<(String, SourceSpan), ()> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Str(_))) {
            let t = self.bump().expect("peeked");
            match t.kind {
                TokenKind::Str(s) => Ok((s, t.span)),
                _ => unreachable!("peeked a string"),
            }
        } else {
            self.expected(&format!("a string ({what})"));
            Err(())
        }
    }

    fn expect_acronym(&mut self, what: &str) -> Result<(Acronym, SourceSpan), ()> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Ident(_))) {
            let t = self.bump().expect("peeked");
            match t.kind {
                TokenKind::Ident(s) => {
                    let acronym = Acronym::new(s).expect("idents are acronym-shaped");
                    Ok((acronym, t.span))
                }
                _ => unreachable!("peeked an ident"),
            }
        } else {
            self.expected(&format!("an acronym ({what})"));
            Err(())
        }
    }

    /// Consumes a string value and rejects blank text for `field`.
    fn nonempty_string(&mut self, field: &str) -> Result<(String, SourceSpan), ()> {
        let (value, span) = self.expect_string(field)?;
        if value.trim().is_empty() {
            self.error(
                Code::E005,
                format!("`{field}` must not be empty"),
                span.clone(),
            );
        }
        Ok((value, span))
    }

    /// Skips tokens until one of the `stop` keywords, a brace or
    /// parenthesis that closes the current block, or end of file. Braces
    /// and parentheses opened while skipping are balanced, so the parser
    /// stays inside the block it was in.
    fn skip_in_block(&mut self, stop: &[&str]) {
        let mut depth: u32 = 0;
        while let Some(token) = self.peek() {
            match &token.kind {
                TokenKind::LBrace | TokenKind::LParen => {
                    depth += 1;
                    self.bump();
                }
                TokenKind::RBrace | TokenKind::RParen => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    self.bump();
                }
                TokenKind::Ident(name) if depth == 0 => {
                    if stop.contains(&name.as_str()) || name == "family" {
                        return;
                    }
                    self.bump();
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Top-level resynchronization: skip to the next `family` keyword.
    fn sync_to_next_family(&mut self) {
        while self.peek().is_some() {
            if self.peek_ident() == Some("family") {
                return;
            }
            self.bump();
        }
    }

    fn corpus(&mut self) -> Vec<Family> {
        let mut families = Vec::new();
        while self.peek().is_some() {
            if self.peek_ident() == Some("family") {
                match self.family() {
                    Parsed::Ok(f) => families.push(f),
                    Parsed::Broken => {}
                    Parsed::Lost => self.sync_to_next_family(),
                }
            } else {
                self.expected("`family`");
                self.bump();
                self.sync_to_next_family();
            }
        }
        families
    }

    fn family(&mut self) -> Parsed<Family> {
        let kw_span = match self.expect_keyword("family") {
            Ok(s) => s,
            Err(()) => return Parsed::Lost,
        };
        let acronym = match self.expect_acronym("family label") {
            Ok((a, _)) => a,
            Err(()) => return Parsed::Lost,
        };
        if self.expect_lbrace().is_err() {
            return Parsed::Lost;
        }

        let original = loop {
            if self.peek_ident() == Some("original") {
                match self.original() {
                    Parsed::Ok(o) => break Some(o),
                    Parsed::Broken => break None,
                    Parsed::Lost => return Parsed::Lost,
                }
            }
            self.expected("`original`");
            if self.peek().is_none() {
                return Parsed::Broken;
            }
            if !matches!(self.peek().map(|t| &t.kind), Some(TokenKind::RBrace)) {
                self.bump();
            }
            self.skip_in_block(&["original", "replication"]);
            if self.peek_ident() != Some("original") {
                break None;
            }
        };

        let mut replications = Vec::new();
        let close_span = loop {
            match self.peek().map(|t| t.kind.clone()) {
                None => {
                    let span = self.eof_span.clone();
                    self.error(
                        Code::E002,
                        format!("family `{acronym}` is not closed before end of file"),
                        span,
                    );
                    return Parsed::Broken;
                }
                Some(TokenKind::RBrace) => {
                    break self.bump().expect("peeked").span;
                }
                Some(TokenKind::Ident(name)) if name == "replication" => match self.replication() {
                    Parsed::Ok(r) => replications.push(r),
                    Parsed::Broken => {}
                    Parsed::Lost => return Parsed::Lost,
                },
                Some(TokenKind::Ident(name)) if name == "family" => {
                    let span = self.here();
                    self.error(
                        Code::E002,
                        format!("family `{acronym}` is not closed before the next family"),
                        span,
                    );
                    return Parsed::Lost;
                }
                _ => {
                    self.expected("`replication` or `}`");
                    self.bump();
                    self.skip_in_block(&["replication"]);
                }
            }
        };

        match original {
            Some(original) => Parsed::Ok(Family {
                acronym,
                original,
                replications,
                span: kw_span.merge(&close_span),
            }),
            None => Parsed::Broken,
        }
    }

    fn original(&mut self) -> Parsed<OriginalStudy> {
        let kw_span = match self.expect_keyword("original") {
            Ok(s) => s,
            Err(()) => return Parsed::Lost,
        };
        if self.expect_keyword("study").is_err() {
            return Parsed::Lost;
        }
        let acronym = match self.expect_acronym("study acronym") {
            Ok((a, _)) => a,
            Err(()) => return Parsed::Lost,
        };
        if self.expect_lbrace().is_err() {
            return Parsed::Lost;
        }

        const FIELDS: &[&str] = &["site", "date", "report", "comments", "goal", "description"];
        let mut site = Slot::<String>::default();
        let mut date = Slot::<StudyDate>::default();
        let mut report = Slot::<String>::default();
        let mut comments = Slot::<String>::default();
        let mut goal = Slot::<Goal>::default();
        let mut description = Slot::<String>::default();

        let close_span = loop {
            match self.peek().map(|t| t.kind.clone()) {
                None => {
                    let span = self.eof_span.clone();
                    self.error(
                        Code::E002,
                        format!("original study `{acronym}` is not closed before end of file"),
                        span,
                    );
                    return Parsed::Lost;
                }
                Some(TokenKind::RBrace) => break self.bump().expect("peeked").span,
                Some(TokenKind::Ident(name)) => {
                    let key_span = self.here();
                    match name.as_str() {
                        "site" => self.string_field("site", &mut site, key_span, FIELDS),
                        "date" => self.date_field(&mut date, key_span, FIELDS),
                        "report" => self.string_field("report", &mut report, key_span, FIELDS),
                        "comments" => {
                            self.string_field("comments", &mut comments, key_span, FIELDS)
                        }
                        "description" => {
                            self.nonempty_field("description", &mut description, key_span, FIELDS)
                        }
                        "goal" => {
                            let dup = goal.occur();
                            if dup {
                                self.error(Code::E003, "duplicate field `goal`", key_span);
                            }
                            match self.goal() {
                                Parsed::Ok(g) => {
                                    if !dup {
                                        goal.fill(g);
                                    }
                                }
                                Parsed::Broken => {}
                                Parsed::Lost => return Parsed::Lost,
                            }
                        }
                        other => {
                            self.error(
                                Code::E002,
                                format!("unexpected field `{other}` in original study"),
                                key_span,
                            );
                            self.bump();
                            self.skip_in_block(FIELDS);
                        }
                    }
                }
                _ => {
                    self.expected("a field or `}`");
                    self.bump();
                    self.skip_in_block(FIELDS);
                }
            }
        };

        let block_span = kw_span.merge(&close_span);
        for (field, seen) in [
            ("site", site.seen),
            ("date", date.seen),
            ("goal", goal.seen),
            ("description", description.seen),
        ] {
            if !seen {
                self.error(
                    Code::E004,
                    format!("original study `{acronym}` is missing required field `{field}`"),
                    block_span.clone(),
                );
            }
        }

        match (site.value, date.value, goal.value, description.value) {
            (Some(site), Some(date), Some(goal), Some(description)) => Parsed::Ok(OriginalStudy {
                core: StudyCore {
                    acronym,
                    site,
                    date,
                    report_url: report.value,
                    comments: comments.value,
                    span: block_span,
                },
                goal,
                description,
            }),
            _ => Parsed::Broken,
        }
    }

    fn goal(&mut self) -> Parsed<Goal> {
        let kw_span = match self.expect_keyword("goal") {
            Ok(s) => s,
            Err(()) => return Parsed::Lost,
        };
        if self.expect_lbrace().is_err() {
            return Parsed::Lost;
        }
        const FIELDS: &[&str] = &["gqm", "cause", "effect", "population"];
        let mut gqm = Slot::<String>::default();
        let mut cause = Slot::<String>::default();
        let mut effect = Slot::<String>::default();
        let mut population = Slot::<String>::default();

        let close_span = loop {
            match self.peek().map(|t| t.kind.clone()) {
                None => {
                    let span = self.eof_span.clone();
                    self.error(Code::E002, "goal block is not closed before end of file", span);
                    return Parsed::Lost;
                }
                Some(TokenKind::RBrace) => break self.bump().expect("peeked").span,
                Some(TokenKind::Ident(name)) => {
                    let key_span = self.here();
                    match name.as_str() {
                        "gqm" => self.nonempty_field("gqm", &mut gqm, key_span, FIELDS),
                        "cause" => self.nonempty_field("cause", &mut cause, key_span, FIELDS),
                        "effect" => self.nonempty_field("effect", &mut effect, key_span, FIELDS),
                        "population" => {
                            self.nonempty_field("population", &mut population, key_span, FIELDS)
                        }
                        other => {
                            self.error(
                                Code::E002,
                                format!("unexpected field `{other}` in goal"),
                                key_span,
                            );
                            self.bump();
                            self.skip_in_block(FIELDS);
                        }
                    }
                }
                _ => {
                    self.expected("a field or `}`");
                    self.bump();
                    self.skip_in_block(FIELDS);
                }
            }
        };

        let block_span = kw_span.merge(&close_span);
        let structured = cause.seen || effect.seen || population.seen;
        if gqm.seen && structured {
            self.error(
                Code::E005,
                "goal mixes `gqm` with `cause`/`effect`/`population`",
                block_span,
            );
            return Parsed::Broken;
        }
        if gqm.seen {
            return match gqm.value {
                Some(g) => Parsed::Ok(Goal::Gqm(g)),
                None => Parsed::Broken,
            };
        }
        for (field, seen) in [
            ("cause", cause.seen),
            ("effect", effect.seen),
            ("population", population.seen),
        ] {
            if !seen {
                self.error(
                    Code::E004,
                    format!("goal is missing required field `{field}` (or use `gqm`)"),
                    block_span.clone(),
                );
            }
        }
        match (cause.value, effect.value, population.value) {
            (Some(cause), Some(effect), Some(population)) => Parsed::Ok(Goal::Structured {
                cause,
                effect,
                population,
            }),
            _ => Parsed::Broken,
        }
    }

    fn replication(&mut self) -> Parsed<Replication> {
        let kw_span = match self.expect_keyword("replication") {
            Ok(s) => s,
            Err(()) => return Parsed::Lost,
        };
        let acronym = match self.expect_acronym("replication acronym") {
            Ok((a, _)) => a,
            Err(()) => return Parsed::Lost,
        };
        if self.expect_keyword("based").is_err() || self.expect_keyword("on").is_err() {
            return Parsed::Lost;
        }
        let base_acronym = match self.expect_acronym("base study acronym") {
            Ok((a, _)) => a,
            Err(()) => return Parsed::Lost,
        };
        if self.expect_lbrace().is_err() {
            return Parsed::Lost;
        }

        const FIELDS: &[&str] = &[
            "kind", "site", "date", "report", "comments", "purposes", "change",
        ];
        let mut kind = Slot::<ReplicationKind>::default();
        let mut site = Slot::<String>::default();
        let mut date = Slot::<StudyDate>::default();
        let mut report = Slot::<String>::default();
        let mut comments = Slot::<String>::default();
        let mut purposes = Slot::<Vec<Purpose>>::default();
        let mut changes: Vec<Change> = Vec::new();
        let mut change_attempts: u32 = 0;
        let mut change_broken = false;

        let close_span = loop {
            match self.peek().map(|t| t.kind.clone()) {
                None => {
                    let span = self.eof_span.clone();
                    self.error(
                        Code::E002,
                        format!("replication `{acronym}` is not closed before end of file"),
                        span,
                    );
                    return Parsed::Lost;
                }
                Some(TokenKind::RBrace) => break self.bump().expect("peeked").span,
                Some(TokenKind::Ident(name)) => {
                    let key_span = self.here();
                    match name.as_str() {
                        "kind" => self.kind_field(&mut kind, key_span, FIELDS),
                        "site" => self.string_field("site", &mut site, key_span, FIELDS),
                        "date" => self.date_field(&mut date, key_span, FIELDS),
                        "report" => self.string_field("report", &mut report, key_span, FIELDS),
                        "comments" => {
                            self.string_field("comments", &mut comments, key_span, FIELDS)
                        }
                        "purposes" => self.purposes_field(&mut purposes, key_span, FIELDS),
                        "change" => {
                            change_attempts += 1;
                            match self.change(change_attempts) {
                                Parsed::Ok(c) => changes.push(c),
                                Parsed::Broken => change_broken = true,
                                Parsed::Lost => return Parsed::Lost,
                            }
                        }
                        other => {
                            self.error(
                                Code::E002,
                                format!("unexpected field `{other}` in replication"),
                                key_span,
                            );
                            self.bump();
                            self.skip_in_block(FIELDS);
                        }
                    }
                }
                _ => {
                    self.expected("a field, `change`, or `}`");
                    self.bump();
                    self.skip_in_block(FIELDS);
                }
            }
        };

        let block_span = kw_span.merge(&close_span);
        for (field, seen) in [
            ("kind", kind.seen),
            ("site", site.seen),
            ("date", date.seen),
            ("purposes", purposes.seen),
        ] {
            if !seen {
                self.error(
                    Code::E004,
                    format!("replication `{acronym}` is missing required field `{field}`"),
                    block_span.clone(),
                );
            }
        }

        match (kind.value, site.value, date.value, purposes.value) {
            (Some(kind), Some(site), Some(date), Some(purposes)) if !change_broken => {
                Parsed::Ok(Replication {
                    core: StudyCore {
                        acronym,
                        site,
                        date,
                        report_url: report.value,
                        comments: comments.value,
                        span: block_span,
                    },
                    kind,
                    purposes,
                    base_acronym,
                    changes,
                })
            }
            _ => Parsed::Broken,
        }
    }

    fn change(&mut self, ordinal: u32) -> Parsed<Change> {
        let kw_span = match self.expect_keyword("change") {
            Ok(s) => s,
            Err(()) => return Parsed::Lost,
        };
        let name = match self.nonempty_string("change name") {
            Ok((n, _)) => n,
            Err(()) => return Parsed::Lost,
        };
        if self.expect_lbrace().is_err() {
            return Parsed::Lost;
        }

        const FIELDS: &[&str] = &[
            "base", "replication", "purpose", "dimension", "impact", "comments",
        ];
        let mut base = Slot::<String>::default();
        let mut repl = Slot::<String>::default();
        let mut purpose = Slot::<String>::default();
        let mut dimension = Slot::<Dimension>::default();
        let mut comments = Slot::<String>::default();
        let mut impacts: Vec<ChangeImpact> = Vec::new();

        let close_span = loop {
            match self.peek().map(|t| t.kind.clone()) {
                None => {
                    let span = self.eof_span.clone();
                    self.error(
                        Code::E002,
                        format!("change \"{name}\" is not closed before end of file"),
                        span,
                    );
                    return Parsed::Lost;
                }
                Some(TokenKind::RBrace) => break self.bump().expect("peeked").span,
                Some(TokenKind::Ident(field)) => {
                    let key_span = self.here();
                    match field.as_str() {
                        "base" => self.nonempty_field("base", &mut base, key_span, FIELDS),
                        "replication" => {
                            self.nonempty_field("replication", &mut repl, key_span, FIELDS)
                        }
                        "purpose" => self.nonempty_field("purpose", &mut purpose, key_span, FIELDS),
                        "comments" => {
                            self.string_field("comments", &mut comments, key_span, FIELDS)
                        }
                        "dimension" => {
                            let dup = dimension.occur();
                            if dup {
                                self.error(Code::E003, "duplicate field `dimension`", key_span);
                            }
                            self.bump();
                            if self.expect_colon().is_err() {
                                self.skip_in_block(FIELDS);
                                continue;
                            }
                            match self.dimension() {
                                Ok(d) => {
                                    if !dup {
                                        dimension.fill(d);
                                    }
                                }
                                Err(()) => self.skip_in_block(FIELDS),
                            }
                        }
                        "impact" => match self.impact() {
                            Ok(i) => impacts.push(i),
                            Err(()) => self.skip_in_block(FIELDS),
                        },
                        other => {
                            self.error(
                                Code::E002,
                                format!("unexpected field `{other}` in change"),
                                key_span,
                            );
                            self.bump();
                            self.skip_in_block(FIELDS);
                        }
                    }
                }
                _ => {
                    self.expected("a field or `}`");
                    self.bump();
                    self.skip_in_block(FIELDS);
                }
            }
        };

        let block_span = kw_span.merge(&close_span);
        for (field, seen) in [
            ("base", base.seen),
            ("replication", repl.seen),
            ("purpose", purpose.seen),
            ("dimension", dimension.seen),
        ] {
            if !seen {
                self.error(
                    Code::E004,
                    format!("change \"{name}\" is missing required field `{field}`"),
                    block_span.clone(),
                );
            }
        }

        match (base.value, repl.value, purpose.value, dimension.value) {
            (Some(base_situation), Some(replication_situation), Some(purpose), Some(dimension)) => {
                Parsed::Ok(Change {
                    ordinal,
                    name,
                    base_situation,
                    replication_situation,
                    purpose,
                    dimension,
                    impacts,
                    comments: comments.value,
                    span: block_span,
                })
            }
            _ => Parsed::Broken,
        }
    }

    fn dimension(&mut self) -> Result<Dimension, ()> {
        let Some(kind) = self.peek_ident().map(String::from) else {
            self.expected("a dimension keyword");
            return Err(());
        };
        let kind_span = self.here();
        self.bump();
        match kind.as_str() {
            "operationalization" => {
                self.expect_lparen()?;
                let element = self.keyword_choice(
                    "operationalization element",
                    &OperationalizationElement::ALL,
                    OperationalizationElement::keyword,
                )?;
                self.expect_rparen()?;
                Ok(Dimension::Operationalization(element))
            }
            "population" => {
                self.expect_lparen()?;
                let (text, _) = self.nonempty_string("population property")?;
                self.expect_rparen()?;
                Ok(Dimension::Population(text))
            }
            "protocol" => {
                self.expect_lparen()?;
                let element = self.keyword_choice(
                    "protocol element",
                    &ProtocolElement::ALL,
                    ProtocolElement::keyword,
                )?;
                self.expect_rparen()?;
                Ok(Dimension::Protocol(element))
            }
            "experimenter" => {
                self.expect_lparen()?;
                let role = self.keyword_choice(
                    "experimenter role",
                    &ExperimenterRole::ALL,
                    ExperimenterRole::keyword,
                )?;
                self.expect_rparen()?;
                Ok(Dimension::Experimenter(role))
            }
            "context" => {
                self.expect_lparen()?;
                let (text, _) = self.nonempty_string("context property")?;
                self.expect_rparen()?;
                Ok(Dimension::Context(text))
            }
            other => {
                self.error(
                    Code::E005,
                    format!(
                        "unknown dimension `{other}` (expected operationalization, population, \
                         protocol, experimenter, or context)"
                    ),
                    kind_span,
                );
                Err(())
            }
        }
    }

    /// Consumes an identifier that must be one of `choices`, mapping it by
    /// keyword; anything else in identifier position is E005.
    fn keyword_choice<T: Copy>(
        &mut self,
        what: &str,
        choices: &[T],
        keyword: fn(T) -> &'static str,
    ) -> Result<T, ()> {
        let span = self.here();
        match self.peek_ident() {
            Some(name) => {
                if let Some(choice) = choices.iter().copied().find(|c| keyword(*c) == name) {
                    self.bump();
                    Ok(choice)
                } else {
                    let expected: Vec<&str> = choices.iter().copied().map(keyword).collect();
                    let msg =
                        format!("unknown {what} `{name}` (expected {})", expected.join(", "));
                    self.error(Code::E005, msg, span);
                    self.bump();
                    Err(())
                }
            }
            None => {
                self.expected(&format!("a {what}"));
                Err(())
            }
        }
    }

    fn impact(&mut self) -> Result<ChangeImpact, ()> {
        let kw_span = self.expect_keyword("impact")?;
        let validity = self.keyword_choice("validity type", &Validity::ALL, Validity::as_str)?;
        self.expect_colon()?;
        let (effect, mut last_span) = match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Int { value, raw }) => {
                let span = self.here();
                self.bump();
                if !(-3..=3).contains(&value) {
                    self.error(
                        Code::E005,
                        format!("effect {raw} is outside [-3, +3]"),
                        span,
                    );
                    return Err(());
                }
                (value as i32, span)
            }
            _ => {
                self.expected("an integer effect");
                return Err(());
            }
        };
        let rationale = if self.peek_ident() == Some("because") {
            self.bump();
            let (text, span) = self.expect_string("rationale")?;
            last_span = span;
            Some(text)
        } else {
            None
        };
        Ok(ChangeImpact {
            validity,
            effect,
            rationale,
            span: kw_span.merge(&last_span),
        })
    }

    /// `name ":" STRING`, keeping the first occurrence and flagging
    /// duplicates (E003). Blank values are allowed here; fields that
    /// require text go through [`Parser::nonempty_field`].
    fn string_field(
        &mut self,
        name: &str,
        slot: &mut Slot<String>,
        key_span: SourceSpan,
        fields: &[&str],
    ) {
        let dup = slot.occur();
        if dup {
            self.error(Code::E003, format!("duplicate field `{name}`"), key_span);
        }
        self.bump();
        if self.expect_colon().is_err() {
            self.skip_in_block(fields);
            return;
        }
        match self.expect_string(name) {
            Ok((value, _)) => {
                if !dup {
                    slot.fill(value);
                }
            }
            Err(()) => self.skip_in_block(fields),
        }
    }

    fn nonempty_field(
        &mut self,
        name: &str,
        slot: &mut Slot<String>,
        key_span: SourceSpan,
        fields: &[&str],
    ) {
        let dup = slot.occur();
        if dup {
            self.error(Code::E003, format!("duplicate field `{name}`"), key_span);
        }
        self.bump();
        if self.expect_colon().is_err() {
            self.skip_in_block(fields);
            return;
        }
        match self.nonempty_string(name) {
            Ok((value, _)) => {
                if !dup {
                    slot.fill(value);
                }
            }
            Err(()) => self.skip_in_block(fields),
        }
    }

    fn date_field(&mut self, slot: &mut Slot<StudyDate>, key_span: SourceSpan, fields: &[&str]) {
        let dup = slot.occur();
        if dup {
            self.error(Code::E003, "duplicate field `date`", key_span);
        }
        self.bump();
        if self.expect_colon().is_err() {
            self.skip_in_block(fields);
            return;
        }
        let value_span = self.here();
        let parsed = match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Int { value, raw }) => {
                self.bump();
                if raw.chars().all(|c| c.is_ascii_digit()) {
                    StudyDate::year(value)
                } else {
                    Err(crate::model::ModelError::InvalidDate(format!(
                        "`{raw}` is not a date"
                    )))
                }
            }
            Some(TokenKind::Date(raw)) => {
                self.bump();
                StudyDate::parse_iso(&raw)
            }
            _ => {
                self.expected("a date (YYYY, YYYY-MM, or YYYY-MM-DD)");
                self.skip_in_block(fields);
                return;
            }
        };
        match parsed {
            Ok(date) => {
                if !dup {
                    slot.fill(date);
                }
            }
            Err(err) => self.error(Code::E005, err.to_string(), value_span),
        }
    }

    fn kind_field(
        &mut self,
        slot: &mut Slot<ReplicationKind>,
        key_span: SourceSpan,
        fields: &[&str],
    ) {
        let dup = slot.occur();
        if dup {
            self.error(Code::E003, "duplicate field `kind`", key_span);
        }
        self.bump();
        if self.expect_colon().is_err() {
            self.skip_in_block(fields);
            return;
        }
        match self.keyword_choice(
            "replication kind",
            &[ReplicationKind::Internal, ReplicationKind::External],
            ReplicationKind::keyword,
        ) {
            Ok(kind) => {
                if !dup {
                    slot.fill(kind);
                }
            }
            Err(()) => self.skip_in_block(fields),
        }
    }

    fn purposes_field(
        &mut self,
        slot: &mut Slot<Vec<Purpose>>,
        key_span: SourceSpan,
        fields: &[&str],
    ) {
        let dup = slot.occur();
        if dup {
            self.error(Code::E003, "duplicate field `purposes`", key_span);
        }
        self.bump();
        if self.expect_colon().is_err() {
            self.skip_in_block(fields);
            return;
        }
        let mut purposes = Vec::new();
        loop {
            match self.keyword_choice("purpose", &Purpose::ALL, Purpose::keyword) {
                Ok(p) => purposes.push(p),
                Err(()) => {
                    self.skip_in_block(fields);
                    return;
                }
            }
            if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
                self.bump();
            } else {
                break;
            }
        }
        purposes.sort_unstable();
        purposes.dedup();
        if !dup {
            slot.fill(purposes);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Severity;

    fn parse_ok(source: &str) -> Corpus {
        let (corpus, diags) = parse(source, "t.fam");
        assert!(
            diags.is_empty(),
            "expected clean parse, got: {:?}",
            diags.iter().map(|d| d.to_string()).collect::<Vec<_>>()
        );
        corpus.expect("corpus present when no errors")
    }

    fn parse_errs(source: &str) -> Vec<Diagnostic> {
        let (corpus, diags) = parse(source, "t.fam");
        assert!(corpus.is_none(), "errors must suppress the corpus");
        assert!(diags.iter().any(|d| d.is_error()));
        diags
    }

    const MINIMAL: &str = r#"family F {
  original study F-0 {
    site: "Lab A"
    date: 2014
    goal { gqm: "G" }
    description: "D"
  }
}"#;

    #[test]
    fn minimal_family_parses() {
        let corpus = parse_ok(MINIMAL);
        assert_eq!(corpus.families.len(), 1);
        let family = &corpus.families[0];
        assert_eq!(family.acronym.as_str(), "F");
        assert_eq!(family.original.core.acronym.as_str(), "F-0");
        assert_eq!(family.original.core.site, "Lab A");
        assert_eq!(family.original.core.date.to_string(), "2014");
        assert_eq!(family.original.goal, Goal::Gqm("G".into()));
        assert_eq!(family.original.description, "D");
        assert!(family.replications.is_empty());
    }

    #[test]
    fn month_out_of_range_is_e005_at_the_date_token() {
        let source = MINIMAL.replace("date: 2014", "date: 2014-13");
        let diags = parse_errs(&source);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].code, Code::E005);
        assert_eq!(diags[0].span.start_line, 4);
        assert_eq!(diags[0].span.start_col, 11);
    }

    const TWO_REPLICATIONS: &str = r#"family Demo {
  original study A {
    site: "UPM"
    date: 2014
    goal { cause: "C" effect: "E" population: "P" }
    description: "students"
  }
  replication R1 based on A {
    kind: internal
    site: "UPM"
    date: 2015-03
    purposes: confirm
    change "training" {
      base: "no training session"
      replication: "one training session"
      purpose: "reduce variance"
      dimension: protocol(experimental_guides)
      impact internal: +1 because "r"
    }
  }
  replication R2 based on R1 {
    kind: external
    site: "UdS"
    date: 2016-07-01
    purposes: generalize, overcome
  }
}"#;

    // Hand-constructed expectation for the change in R1.
    #[test]
    fn change_with_impact_builds_the_expected_model_value() {
        let corpus = parse_ok(TWO_REPLICATIONS);
        let family = &corpus.families[0];
        assert_eq!(family.replications.len(), 2);
        let r1 = &family.replications[0];
        assert_eq!(r1.changes.len(), 1);
        let change = &r1.changes[0];
        assert_eq!(change.ordinal, 1);
        assert_eq!(change.name, "training");
        assert_eq!(change.base_situation, "no training session");
        assert_eq!(change.replication_situation, "one training session");
        assert_eq!(
            change.dimension,
            Dimension::Protocol(ProtocolElement::ExperimentalGuides)
        );
        assert_eq!(change.impacts.len(), 1);
        let impact = &change.impacts[0];
        assert_eq!(impact.validity, Validity::Internal);
        assert_eq!(impact.effect, 1);
        assert_eq!(impact.rationale.as_deref(), Some("r"));
    }

    #[test]
    fn purposes_are_deduplicated_and_canonically_ordered() {
        let source = TWO_REPLICATIONS.replace(
            "purposes: generalize, overcome",
            "purposes: overcome, generalize, overcome",
        );
        let corpus = parse_ok(&source);
        assert_eq!(
            corpus.families[0].replications[1].purposes,
            vec![Purpose::GeneralizeResults, Purpose::OvercomeLimitations]
        );
    }

    #[test]
    fn replication_kind_and_base_are_recorded() {
        let corpus = parse_ok(TWO_REPLICATIONS);
        let family = &corpus.families[0];
        assert_eq!(family.replications[0].kind, ReplicationKind::Internal);
        assert_eq!(family.replications[1].kind, ReplicationKind::External);
        assert_eq!(family.replications[1].base_acronym.as_str(), "R1");
    }

    #[test]
    fn duplicate_field_is_e003() {
        let source = MINIMAL.replace("site: \"Lab A\"", "site: \"Lab A\"\n    site: \"Lab B\"");
        let diags = parse_errs(&source);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::E003);
        assert!(diags[0].message.contains("site"));
    }

    #[test]
    fn duplicate_field_keeps_the_first_value() {
        let source = MINIMAL.replace("site: \"Lab A\"", "site: \"Lab A\"\n    site: \"Lab B\"");
        let lexed_once = parse(&source, "t.fam");
        assert!(lexed_once.0.is_none());
    }

    #[test]
    fn missing_required_field_is_e004() {
        let source = MINIMAL.replace("    site: \"Lab A\"\n", "");
        let diags = parse_errs(&source);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::E004);
        assert!(diags[0].message.contains("`site`"));
        assert!(diags[0].message.contains("F-0"));
    }

    #[test]
    fn invalid_field_value_does_not_also_report_missing_field() {
        let source = MINIMAL.replace("date: 2014", "date: 2014-13");
        let diags = parse_errs(&source);
        assert!(diags.iter().all(|d| d.code != Code::E004));
    }

    #[test]
    fn unknown_dimension_keyword_is_e005() {
        let source = TWO_REPLICATIONS.replace(
            "dimension: protocol(experimental_guides)",
            "dimension: procedure(experimental_guides)",
        );
        let diags = parse_errs(&source);
        assert!(diags
            .iter()
            .any(|d| d.code == Code::E005 && d.message.contains("procedure")));
    }

    #[test]
    fn effect_out_of_range_is_e005() {
        let source = TWO_REPLICATIONS.replace("impact internal: +1", "impact internal: +4");
        let diags = parse_errs(&source);
        assert!(diags
            .iter()
            .any(|d| d.code == Code::E005 && d.message.contains("+4")));
    }

    #[test]
    fn empty_required_text_is_e005() {
        let source = MINIMAL.replace("description: \"D\"", "description: \"  \"");
        let diags = parse_errs(&source);
        assert_eq!(diags[0].code, Code::E005);
        assert!(diags[0].message.contains("description"));
    }

    #[test]
    fn goal_mixing_forms_is_e005() {
        let source = MINIMAL.replace("goal { gqm: \"G\" }", "goal { gqm: \"G\" cause: \"C\" }");
        let diags = parse_errs(&source);
        assert!(diags
            .iter()
            .any(|d| d.code == Code::E005 && d.message.contains("goal")));
    }

    #[test]
    fn unexpected_token_is_e002_and_parsing_recovers() {
        let second = MINIMAL
            .replace("family F", "family G")
            .replace("study F-0", "study G-0");
        let source = format!("{MINIMAL}\nfamily 42 {{ }}\n{second}");
        let (corpus, diags) = parse(&source, "t.fam");
        assert!(corpus.is_none());
        let errors: Vec<_> = diags.iter().filter(|d| d.is_error()).collect();
        assert_eq!(errors.len(), 1, "{errors:?}");
        assert_eq!(errors[0].code, Code::E002);
    }

    #[test]
    fn multiple_errors_are_reported_in_one_run() {
        let source = MINIMAL
            .replace("date: 2014", "date: 2014-13")
            .replace("description: \"D\"", "description: \"\"");
        let diags = parse_errs(&source);
        assert!(diags.len() >= 2, "{diags:?}");
    }

    #[test]
    fn empty_source_yields_empty_corpus() {
        let (corpus, diags) = parse("", "t.fam");
        assert!(diags.is_empty());
        assert_eq!(corpus.expect("no errors").families.len(), 0);
    }

    #[test]
    fn comments_are_ignored() {
        let source = format!(
            "// heading\n{}",
            MINIMAL.replace("date: 2014", "date: 2014 // when")
        );
        parse_ok(&source);
    }

    #[test]
    fn parse_is_deterministic() {
        let a = parse(TWO_REPLICATIONS, "t.fam");
        let b = parse(TWO_REPLICATIONS, "t.fam");
        assert_eq!(a.0, b.0);
        assert_eq!(
            a.1.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            b.1.iter().map(|d| d.to_string()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn diagnostic_spans_stay_inside_the_input() {
        let source = MINIMAL.replace("goal", "gaol");
        let (_, diags) = parse(&source, "t.fam");
        assert!(!diags.is_empty());
        let line_count = source.lines().count();
        for d in &diags {
            assert!(d.span.start_line >= 1);
            assert!((d.span.start_line as usize) <= line_count + 1);
            assert!(d.span.start_col >= 1);
        }
    }

    #[test]
    fn model_spans_point_at_defining_blocks() {
        let corpus = parse_ok(TWO_REPLICATIONS);
        let family = &corpus.families[0];
        assert_eq!(family.span.file, "t.fam");
        assert_eq!(family.span.start_line, 1);
        assert_eq!(family.original.core.span.start_line, 2);
        let change = &family.replications[0].changes[0];
        assert_eq!(change.span.start_line, 13);
        assert_eq!(change.impacts[0].span.start_line, 18);
    }

    #[test]
    fn parse_sources_concatenates_good_files_and_keeps_bad_file_diagnostics() {
        let good = NamedSource::new("a.fam", MINIMAL);
        let bad = NamedSource::new(
            "b.fam",
            MINIMAL
                .replace("family F", "family G")
                .replace("goal {", "goal ("),
        );
        let (corpus, diags) = parse_sources(&[good, bad]);
        assert_eq!(corpus.families.len(), 1);
        assert_eq!(corpus.families[0].acronym.as_str(), "F");
        assert!(diags.iter().any(|d| d.is_error() && d.span.file == "b.fam"));
    }

    #[test]
    fn parse_corpus_flags_unreadable_files() {
        let dir = tempfile::tempdir().expect("tempdir");
        let good_path = dir.path().join("good.fam");
        std::fs::write(&good_path, MINIMAL).expect("write");
        let missing = dir.path().join("missing.fam");
        let (corpus, diags) = parse_corpus(&[good_path, missing]);
        assert_eq!(corpus.families.len(), 1);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, Code::E010);
        assert_eq!(diags[0].severity, Severity::Error);
    }

    #[test]
    fn parse_corpus_of_no_files_is_empty_and_clean() {
        let (corpus, diags) = parse_corpus(&[]);
        assert!(corpus.families.is_empty());
        assert!(diags.is_empty());
    }
}
