//! Canonical JSON interchange and text emission for corpora.
//!
//! [`to_json`] writes a corpus as a canonical JSON document: object keys
//! in a fixed order, replications in canonical order, dates as ISO values
//! with an explicit precision, enums in lowercase snake case, two-space
//! indentation, and a trailing newline. Equal corpora produce equal
//! bytes. [`from_json`] reads such a document back, reporting E301 for
//! malformed JSON, E302 for an unsupported schema declaration, and E303
//! for shape or value mismatches (naming the offending path), then runs
//! the regular corpus validation. [`emit_dsl`] writes a corpus back out
//! in the study-description language accepted by the parser.
//!
//! The JSON document shape is described in `schemas/caesar-kit-1.json`.

use serde::{Deserialize, Serialize};

use crate::analysis::canonical_replications;
use crate::diag::{Code, Diagnostic, SourceSpan};
use crate::model::{
    Acronym, Change, ChangeImpact, Corpus, DatePrecision, Dimension, ExperimenterRole, Family,
    Goal, OperationalizationElement, OriginalStudy, ProtocolElement, Purpose, Replication,
    ReplicationKind, StudyCore, StudyDate, Validity,
};
use crate::validation::validate;

/// Schema identifier accepted and emitted by this crate.
pub const SCHEMA_ID: &str = "caesar-kit/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusDoc {
    schema: String,
    families: Vec<FamilyDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDoc {
    label: String,
    original: OriginalDoc,
    replications: Vec<ReplicationDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OriginalDoc {
    acronym: String,
    site: String,
    date: DateDoc,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    report_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    comments: Option<String>,
    goal: GoalDoc,
    description: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DateDoc {
    value: String,
    precision: DatePrecision,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalDoc {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    gqm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    cause: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    effect: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    population: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplicationDoc {
    acronym: String,
    kind: ReplicationKind,
    site: String,
    date: DateDoc,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    report_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    comments: Option<String>,
    based_on: String,
    purposes: Vec<Purpose>,
    changes: Vec<ChangeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChangeDoc {
    name: String,
    base_situation: String,
    replication_situation: String,
    purpose: String,
    dimension: DimensionDoc,
    impacts: Vec<ImpactDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    comments: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DimensionDoc {
    Operationalization { element: OperationalizationElement },
    Population { property: String },
    Protocol { element: ProtocolElement },
    Experimenter { role: ExperimenterRole },
    Context { property: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImpactDoc {
    validity: Validity,
    effect: i32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    rationale: Option<String>,
}

fn date_doc(date: &StudyDate) -> DateDoc {
    DateDoc {
        value: date.to_string(),
        precision: date.precision(),
    }
}

fn goal_doc(goal: &Goal) -> GoalDoc {
    match goal {
        Goal::Gqm(statement) => GoalDoc {
            gqm: Some(statement.clone()),
            cause: None,
            effect: None,
            population: None,
        },
        Goal::Structured {
            cause,
            effect,
            population,
        } => GoalDoc {
            gqm: None,
            cause: Some(cause.clone()),
            effect: Some(effect.clone()),
            population: Some(population.clone()),
        },
    }
}

fn dimension_doc(dimension: &Dimension) -> DimensionDoc {
    match dimension {
        Dimension::Operationalization(element) => DimensionDoc::Operationalization {
            element: *element,
        },
        Dimension::Population(property) => DimensionDoc::Population {
            property: property.clone(),
        },
        Dimension::Protocol(element) => DimensionDoc::Protocol { element: *element },
        Dimension::Experimenter(role) => DimensionDoc::Experimenter { role: *role },
        Dimension::Context(property) => DimensionDoc::Context {
            property: property.clone(),
        },
    }
}

fn change_doc(change: &Change) -> ChangeDoc {
    ChangeDoc {
        name: change.name.clone(),
        base_situation: change.base_situation.clone(),
        replication_situation: change.replication_situation.clone(),
        purpose: change.purpose.clone(),
        dimension: dimension_doc(&change.dimension),
        impacts: change
            .impacts
            .iter()
            .map(|impact| ImpactDoc {
                validity: impact.validity,
                effect: impact.effect,
                rationale: impact.rationale.clone(),
            })
            .collect(),
        comments: change.comments.clone(),
    }
}

fn family_doc(family: &Family) -> FamilyDoc {
    FamilyDoc {
        label: family.acronym.to_string(),
        original: OriginalDoc {
            acronym: family.original.core.acronym.to_string(),
            site: family.original.core.site.clone(),
            date: date_doc(&family.original.core.date),
            report_url: family.original.core.report_url.clone(),
            comments: family.original.core.comments.clone(),
            goal: goal_doc(&family.original.goal),
            description: family.original.description.clone(),
        },
        replications: canonical_replications(family)
            .into_iter()
            .map(|replication| ReplicationDoc {
                acronym: replication.core.acronym.to_string(),
                kind: replication.kind,
                site: replication.core.site.clone(),
                date: date_doc(&replication.core.date),
                report_url: replication.core.report_url.clone(),
                comments: replication.core.comments.clone(),
                based_on: replication.base_acronym.to_string(),
                purposes: replication.purposes.clone(),
                changes: replication.changes.iter().map(change_doc).collect(),
            })
            .collect(),
    }
}

/// Serializes the corpus as a canonical JSON document.
pub fn to_json(corpus: &Corpus) -> String {
    let doc = CorpusDoc {
        schema: SCHEMA_ID.to_string(),
        families: corpus.families.iter().map(family_doc).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

/// Collects conversion diagnostics while turning the document tree into
/// the corpus model. Every diagnostic names the JSON path it refers to.
struct Conversion {
    span: SourceSpan,
    diags: Vec<Diagnostic>,
}

impl Conversion {
    fn mismatch(&mut self, path: &str, detail: impl std::fmt::Display) {
        self.diags.push(Diagnostic::new(
            Code::E303,
            format!("{detail} at {path}"),
            self.span.clone(),
        ));
    }

    fn acronym(&mut self, text: &str, path: &str) -> Option<Acronym> {
        match Acronym::new(text) {
            Ok(acronym) => Some(acronym),
            Err(err) => {
                self.mismatch(path, err);
                None
            }
        }
    }

    fn date(&mut self, doc: &DateDoc, path: &str) -> Option<StudyDate> {
        let date = match StudyDate::parse_iso(&doc.value) {
            Ok(date) => date,
            Err(err) => {
                self.mismatch(path, err);
                return None;
            }
        };
        if date.precision() != doc.precision {
            self.mismatch(
                path,
                format!(
                    "declared precision does not match the date value \"{}\"",
                    doc.value
                ),
            );
            return None;
        }
        Some(date)
    }

    fn goal(&mut self, doc: &GoalDoc, path: &str) -> Option<Goal> {
        let structured =
            doc.cause.is_some() || doc.effect.is_some() || doc.population.is_some();
        match (&doc.gqm, structured) {
            (Some(_), true) => {
                self.mismatch(path, "goal mixes `gqm` with `cause`/`effect`/`population`");
                None
            }
            (Some(gqm), false) => Some(Goal::Gqm(gqm.clone())),
            (None, true) => match (&doc.cause, &doc.effect, &doc.population) {
                (Some(cause), Some(effect), Some(population)) => Some(Goal::Structured {
                    cause: cause.clone(),
                    effect: effect.clone(),
                    population: population.clone(),
                }),
                _ => {
                    self.mismatch(
                        path,
                        "structured goal requires `cause`, `effect`, and `population`",
                    );
                    None
                }
            },
            (None, false) => {
                self.mismatch(path, "goal provides neither `gqm` nor structured fields");
                None
            }
        }
    }

    fn core(
        &mut self,
        acronym: &str,
        site: &str,
        date: &DateDoc,
        report_url: &Option<String>,
        comments: &Option<String>,
        path: &str,
    ) -> Option<StudyCore> {
        let acronym = self.acronym(acronym, &format!("{path}.acronym"));
        let date = self.date(date, &format!("{path}.date"));
        Some(StudyCore {
            acronym: acronym?,
            site: site.to_string(),
            date: date?,
            report_url: report_url.clone(),
            comments: comments.clone(),
            span: self.span.clone(),
        })
    }

    fn change(&mut self, doc: &ChangeDoc, ordinal: u32) -> Change {
        let dimension = match &doc.dimension {
            DimensionDoc::Operationalization { element } => {
                Dimension::Operationalization(*element)
            }
            DimensionDoc::Population { property } => Dimension::Population(property.clone()),
            DimensionDoc::Protocol { element } => Dimension::Protocol(*element),
            DimensionDoc::Experimenter { role } => Dimension::Experimenter(*role),
            DimensionDoc::Context { property } => Dimension::Context(property.clone()),
        };
        Change {
            ordinal,
            name: doc.name.clone(),
            base_situation: doc.base_situation.clone(),
            replication_situation: doc.replication_situation.clone(),
            purpose: doc.purpose.clone(),
            dimension,
            impacts: doc
                .impacts
                .iter()
                .map(|impact| ChangeImpact {
                    validity: impact.validity,
                    effect: impact.effect,
                    rationale: impact.rationale.clone(),
                    span: self.span.clone(),
                })
                .collect(),
            comments: doc.comments.clone(),
            span: self.span.clone(),
        }
    }

    fn replication(&mut self, doc: &ReplicationDoc, path: &str) -> Option<Replication> {
        let core = self.core(
            &doc.acronym,
            &doc.site,
            &doc.date,
            &doc.report_url,
            &doc.comments,
            path,
        );
        let base = self.acronym(&doc.based_on, &format!("{path}.based_on"));
        let mut purposes = doc.purposes.clone();
        purposes.sort_unstable();
        purposes.dedup();
        let changes = doc
            .changes
            .iter()
            .enumerate()
            .map(|(i, change)| self.change(change, (i + 1) as u32))
            .collect();
        Some(Replication {
            core: core?,
            kind: doc.kind,
            purposes,
            base_acronym: base?,
            changes,
        })
    }

    fn family(&mut self, doc: &FamilyDoc, path: &str) -> Option<Family> {
        let label = self.acronym(&doc.label, &format!("{path}.label"));
        let original_path = format!("{path}.original");
        let core = self.core(
            &doc.original.acronym,
            &doc.original.site,
            &doc.original.date,
            &doc.original.report_url,
            &doc.original.comments,
            &original_path,
        );
        let goal = self.goal(&doc.original.goal, &format!("{original_path}.goal"));
        let mut replications = Vec::with_capacity(doc.replications.len());
        let mut complete = true;
        for (i, replication) in doc.replications.iter().enumerate() {
            match self.replication(replication, &format!("{path}.replications[{i}]")) {
                Some(replication) => replications.push(replication),
                None => complete = false,
            }
        }
        let family = Family {
            acronym: label?,
            original: OriginalStudy {
                core: core?,
                goal: goal?,
                description: doc.original.description.clone(),
            },
            replications,
            span: self.span.clone(),
        };
        complete.then_some(family)
    }
}

/// Reads a canonical JSON document back into a corpus, then validates it.
/// The corpus is `Some` exactly when no error-severity diagnostic was
/// produced; `source_name` labels the diagnostics.
pub fn from_json(text: &str, source_name: &str) -> (Option<Corpus>, Vec<Diagnostic>) {
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(value) => value,
        Err(err) => {
            let span = if err.line() > 0 {
                SourceSpan::new(
                    source_name,
                    err.line() as u32,
                    err.column().max(1) as u32,
                    err.line() as u32,
                    err.column().max(1) as u32,
                )
            } else {
                SourceSpan::synthetic(source_name)
            };
            let diag = Diagnostic::new(Code::E301, format!("malformed JSON: {err}"), span);
            return (None, vec![diag]);
        }
    };

    let span = SourceSpan::synthetic(source_name);
    let schema = value.get("schema").and_then(serde_json::Value::as_str);
    match schema {
        Some(SCHEMA_ID) => {}
        Some(other) => {
            let diag = Diagnostic::new(
                Code::E302,
                format!("unsupported schema \"{other}\" (this tool reads \"{SCHEMA_ID}\")"),
                span,
            );
            return (None, vec![diag]);
        }
        None => {
            let diag = Diagnostic::new(
                Code::E302,
                format!("document does not declare \"schema\": \"{SCHEMA_ID}\""),
                span,
            );
            return (None, vec![diag]);
        }
    }

    let doc: CorpusDoc = match serde_path_to_error::deserialize(value) {
        Ok(doc) => doc,
        Err(err) => {
            let path = err.path().to_string();
            let diag = Diagnostic::new(
                Code::E303,
                format!("{} at {path}", err.into_inner()),
                span,
            );
            return (None, vec![diag]);
        }
    };

    let mut conversion = Conversion {
        span,
        diags: Vec::new(),
    };
    let mut families = Vec::with_capacity(doc.families.len());
    let mut complete = true;
    for (i, family) in doc.families.iter().enumerate() {
        match conversion.family(family, &format!("families[{i}]")) {
            Some(family) => families.push(family),
            None => complete = false,
        }
    }
    let mut diags = conversion.diags;
    if !complete {
        crate::diag::sort_diagnostics(&mut diags);
        return (None, diags);
    }

    let corpus = Corpus { families };
    diags.extend(validate(&corpus));
    crate::diag::sort_diagnostics(&mut diags);
    if diags.iter().any(Diagnostic::is_error) {
        (None, diags)
    } else {
        (Some(corpus), diags)
    }
}

fn escape_dsl(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

fn dsl_effect(effect: i32) -> String {
    if effect == 0 {
        "0".to_string()
    } else {
        format!("{effect:+}")
    }
}

fn dsl_dimension(dimension: &Dimension) -> String {
    match dimension {
        Dimension::Operationalization(element) => {
            format!("operationalization({})", element.keyword())
        }
        Dimension::Population(property) => {
            format!("population(\"{}\")", escape_dsl(property))
        }
        Dimension::Protocol(element) => format!("protocol({})", element.keyword()),
        Dimension::Experimenter(role) => format!("experimenter({})", role.keyword()),
        Dimension::Context(property) => format!("context(\"{}\")", escape_dsl(property)),
    }
}

fn emit_core_fields(out: &mut String, core: &StudyCore, indent: &str) {
    out.push_str(&format!("{indent}site: \"{}\"\n", escape_dsl(&core.site)));
    out.push_str(&format!("{indent}date: {}\n", core.date));
    if let Some(url) = &core.report_url {
        out.push_str(&format!("{indent}report: \"{}\"\n", escape_dsl(url)));
    }
    if let Some(comments) = &core.comments {
        out.push_str(&format!("{indent}comments: \"{}\"\n", escape_dsl(comments)));
    }
}

fn emit_goal(out: &mut String, goal: &Goal, indent: &str) {
    match goal {
        Goal::Gqm(statement) => {
            out.push_str(&format!(
                "{indent}goal {{ gqm: \"{}\" }}\n",
                escape_dsl(statement)
            ));
        }
        Goal::Structured {
            cause,
            effect,
            population,
        } => {
            out.push_str(&format!("{indent}goal {{\n"));
            out.push_str(&format!("{indent}  cause: \"{}\"\n", escape_dsl(cause)));
            out.push_str(&format!("{indent}  effect: \"{}\"\n", escape_dsl(effect)));
            out.push_str(&format!(
                "{indent}  population: \"{}\"\n",
                escape_dsl(population)
            ));
            out.push_str(&format!("{indent}}}\n"));
        }
    }
}

fn emit_change(out: &mut String, change: &Change, indent: &str) {
    out.push_str(&format!(
        "{indent}change \"{}\" {{\n",
        escape_dsl(&change.name)
    ));
    let inner = format!("{indent}  ");
    out.push_str(&format!(
        "{inner}base: \"{}\"\n",
        escape_dsl(&change.base_situation)
    ));
    out.push_str(&format!(
        "{inner}replication: \"{}\"\n",
        escape_dsl(&change.replication_situation)
    ));
    out.push_str(&format!(
        "{inner}purpose: \"{}\"\n",
        escape_dsl(&change.purpose)
    ));
    out.push_str(&format!(
        "{inner}dimension: {}\n",
        dsl_dimension(&change.dimension)
    ));
    for impact in &change.impacts {
        let mut line = format!(
            "{inner}impact {}: {}",
            impact.validity.as_str(),
            dsl_effect(impact.effect)
        );
        if let Some(rationale) = &impact.rationale {
            line.push_str(&format!(" because \"{}\"", escape_dsl(rationale)));
        }
        line.push('\n');
        out.push_str(&line);
    }
    if let Some(comments) = &change.comments {
        out.push_str(&format!("{inner}comments: \"{}\"\n", escape_dsl(comments)));
    }
    out.push_str(&format!("{indent}}}\n"));
}

/// Writes the corpus in the study-description language: two-space
/// indentation, fields in grammar order, replications in canonical order,
/// one blank line between families. An empty corpus produces empty text.
pub fn emit_dsl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (i, family) in corpus.families.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("family {} {{\n", family.acronym));

        out.push_str(&format!(
            "  original study {} {{\n",
            family.original.core.acronym
        ));
        emit_core_fields(&mut out, &family.original.core, "    ");
        emit_goal(&mut out, &family.original.goal, "    ");
        out.push_str(&format!(
            "    description: \"{}\"\n",
            escape_dsl(&family.original.description)
        ));
        out.push_str("  }\n");

        for replication in canonical_replications(family) {
            out.push_str(&format!(
                "  replication {} based on {} {{\n",
                replication.core.acronym, replication.base_acronym
            ));
            out.push_str(&format!("    kind: {}\n", replication.kind.keyword()));
            emit_core_fields(&mut out, &replication.core, "    ");
            let purposes: Vec<&str> =
                replication.purposes.iter().map(|p| p.keyword()).collect();
            out.push_str(&format!("    purposes: {}\n", purposes.join(", ")));
            for change in &replication.changes {
                emit_change(&mut out, change, "    ");
            }
            out.push_str("  }\n");
        }

        out.push_str("}\n");
    }
    out
}
