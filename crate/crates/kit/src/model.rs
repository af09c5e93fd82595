//! Domain types for families of empirical studies and their replication
//! changes, plus the pure computations defined directly on them.
//!
//! A [`Family`] is one [`OriginalStudy`] and the [`Replication`]s
//! transitively based on it. Each replication lists its [`Change`]s; each
//! change affects exactly one [`Dimension`] of the experimental setup and
//! carries zero or more [`ChangeImpact`]s on experimental [`Validity`].
//!
//! All values are immutable after construction and freely shareable across
//! threads. Construction-time guards live in [`Acronym`] and [`StudyDate`];
//! the cross-cutting rules (reference resolution, uniqueness, impact
//! hygiene) are enforced by the `validation` module.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid acronym `{0}` (expected a letter followed by letters, digits, `_` or `-`)")]
    InvalidAcronym(String),
    #[error("invalid date: {0}")]
    InvalidDate(String),
    #[error("unknown acronym `{0}` in this family")]
    UnknownAcronym(String),
}

/// Identifier of a study or family: a letter followed by letters, digits,
/// `_`, or `-`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Acronym(String);

impl Acronym {
    pub fn new(s: impl Into<String>) -> Result<Self, ModelError> {
        let s = s.into();
        let mut chars = s.chars();
        let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic());
        let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if head_ok && tail_ok {
            Ok(Acronym(s))
        } else {
            Err(ModelError::InvalidAcronym(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Acronym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Acronym {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

/// Calendar date at year, year-month, or full precision.
///
/// Displays in ISO-8601 form at its stored precision (`2014`, `2014-05`,
/// `2014-05-03`). The derived order treats missing components as zero, so a
/// bare year sorts before any dated day within that year; use
/// [`StudyDate::cmp_at_shared_precision`] to compare only the components
/// both dates actually carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StudyDate {
    year: u16,
    month: Option<u8>,
    day: Option<u8>,
}

impl StudyDate {
    pub fn year(year: i64) -> Result<Self, ModelError> {
        let year = check_year(year)?;
        Ok(StudyDate {
            year,
            month: None,
            day: None,
        })
    }

    pub fn year_month(year: i64, month: i64) -> Result<Self, ModelError> {
        let year = check_year(year)?;
        let month = check_month(month)?;
        Ok(StudyDate {
            year,
            month: Some(month),
            day: None,
        })
    }

    pub fn full(year: i64, month: i64, day: i64) -> Result<Self, ModelError> {
        let year = check_year(year)?;
        let month = check_month(month)?;
        if day < 1 || day > i64::from(days_in_month(year, month)) {
            return Err(ModelError::InvalidDate(format!(
                "day {day} out of range for {year:04}-{month:02}"
            )));
        }
        Ok(StudyDate {
            year,
            month: Some(month),
            day: Some(day as u8),
        })
    }

    /// Parses the ISO forms `YYYY`, `YYYY-MM`, and `YYYY-MM-DD`.
    pub fn parse_iso(s: &str) -> Result<Self, ModelError> {
        let mut parts = s.split('-');
        let num = |p: Option<&str>| -> Result<Option<i64>, ModelError> {
            match p {
                None => Ok(None),
                Some(text) => text
                    .parse::<i64>()
                    .map(Some)
                    .map_err(|_| ModelError::InvalidDate(format!("`{s}` is not an ISO date"))),
            }
        };
        let y = num(parts.next())?.ok_or_else(|| {
            ModelError::InvalidDate(format!("`{s}` is not an ISO date"))
        })?;
        let m = num(parts.next())?;
        let d = num(parts.next())?;
        if parts.next().is_some() {
            return Err(ModelError::InvalidDate(format!("`{s}` is not an ISO date")));
        }
        match (m, d) {
            (None, _) => StudyDate::year(y),
            (Some(m), None) => StudyDate::year_month(y, m),
            (Some(m), Some(d)) => StudyDate::full(y, m, d),
        }
    }

    pub fn year_value(&self) -> u16 {
        self.year
    }

    pub fn month_value(&self) -> Option<u8> {
        self.month
    }

    pub fn day_value(&self) -> Option<u8> {
        self.day
    }

    pub fn precision(&self) -> DatePrecision {
        match (self.month, self.day) {
            (None, _) => DatePrecision::Year,
            (Some(_), None) => DatePrecision::YearMonth,
            (Some(_), Some(_)) => DatePrecision::Day,
        }
    }

    /// Compares only the components present in both dates, so `2014`
    /// neither precedes nor follows `2014-05`.
    pub fn cmp_at_shared_precision(&self, other: &StudyDate) -> std::cmp::Ordering {
        use std::cmp::Ordering::Equal;
        let by_year = self.year.cmp(&other.year);
        if by_year != Equal {
            return by_year;
        }
        match (self.month, other.month) {
            (Some(a), Some(b)) if a != b => a.cmp(&b),
            (Some(_), Some(_)) => match (self.day, other.day) {
                (Some(a), Some(b)) => a.cmp(&b),
                _ => Equal,
            },
            _ => Equal,
        }
    }
}

impl fmt::Display for StudyDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.month, self.day) {
            (None, _) => write!(f, "{:04}", self.year),
            (Some(m), None) => write!(f, "{:04}-{:02}", self.year, m),
            (Some(m), Some(d)) => write!(f, "{:04}-{:02}-{:02}", self.year, m, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatePrecision {
    Year,
    YearMonth,
    Day,
}

fn check_year(year: i64) -> Result<u16, ModelError> {
    if (1..=9999).contains(&year) {
        Ok(year as u16)
    } else {
        Err(ModelError::InvalidDate(format!("year {year} out of range 1..=9999")))
    }
}

fn check_month(month: i64) -> Result<u8, ModelError> {
    if (1..=12).contains(&month) {
        Ok(month as u8)
    } else {
        Err(ModelError::InvalidDate(format!("month {month} out of range 1..=12")))
    }
}

fn days_in_month(year: u16, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            let leap =
                year.is_multiple_of(4) && (!year.is_multiple_of(100) || year.is_multiple_of(400));
            if leap {
                29
            } else {
                28
            }
        }
        _ => unreachable!("month already range-checked"),
    }
}

/// The four types of experimental validity, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Conclusion,
    Internal,
    Construct,
    External,
}

impl Validity {
    pub const ALL: [Validity; 4] = [
        Validity::Conclusion,
        Validity::Internal,
        Validity::Construct,
        Validity::External,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Validity::Conclusion => "conclusion",
            Validity::Internal => "internal",
            Validity::Construct => "construct",
            Validity::External => "external",
        }
    }

    fn index(self) -> usize {
        match self {
            Validity::Conclusion => 0,
            Validity::Internal => 1,
            Validity::Construct => 2,
            Validity::External => 3,
        }
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One integer per validity type, in [`Validity::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Scores([i64; 4]);

impl Scores {
    pub fn get(&self, validity: Validity) -> i64 {
        self.0[validity.index()]
    }

    pub fn add(&mut self, validity: Validity, delta: i64) {
        self.0[validity.index()] += delta;
    }

    /// Component-wise sum.
    pub fn plus(&self, other: &Scores) -> Scores {
        let mut out = *self;
        for v in Validity::ALL {
            out.add(v, other.get(v));
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (Validity, i64)> + '_ {
        Validity::ALL.into_iter().map(move |v| (v, self.get(v)))
    }
}

/// The impact of one change on one validity type.
///
/// `effect` is meaningful in `[-3, +3]`; the parser rejects anything else
/// outside that range, while JSON imports defer the range check to
/// validation (code E105). A nonzero effect requires a rationale (E106).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeImpact {
    pub validity: Validity,
    pub effect: i32,
    pub rationale: Option<String>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationalizationElement {
    Treatments,
    Metrics,
    MeasurementProcedures,
}

impl OperationalizationElement {
    pub const ALL: [OperationalizationElement; 3] = [
        OperationalizationElement::Treatments,
        OperationalizationElement::Metrics,
        OperationalizationElement::MeasurementProcedures,
    ];

    /// Keyword in the study source format.
    pub fn keyword(self) -> &'static str {
        match self {
            OperationalizationElement::Treatments => "treatments",
            OperationalizationElement::Metrics => "metrics",
            OperationalizationElement::MeasurementProcedures => "measurement_procedures",
        }
    }

    /// Human wording used in rendered reports.
    pub fn label(self) -> &'static str {
        match self {
            OperationalizationElement::Treatments => "treatments",
            OperationalizationElement::Metrics => "metrics",
            OperationalizationElement::MeasurementProcedures => "measurement procedures",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolElement {
    ExperimentalDesign,
    ExperimentalMaterial,
    ExperimentalGuides,
    MeasuringInstruments,
    DataAnalysisTechniques,
}

impl ProtocolElement {
    pub const ALL: [ProtocolElement; 5] = [
        ProtocolElement::ExperimentalDesign,
        ProtocolElement::ExperimentalMaterial,
        ProtocolElement::ExperimentalGuides,
        ProtocolElement::MeasuringInstruments,
        ProtocolElement::DataAnalysisTechniques,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ProtocolElement::ExperimentalDesign => "experimental_design",
            ProtocolElement::ExperimentalMaterial => "experimental_material",
            ProtocolElement::ExperimentalGuides => "experimental_guides",
            ProtocolElement::MeasuringInstruments => "measuring_instruments",
            ProtocolElement::DataAnalysisTechniques => "data_analysis_techniques",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProtocolElement::ExperimentalDesign => "experimental design",
            ProtocolElement::ExperimentalMaterial => "experimental material",
            ProtocolElement::ExperimentalGuides => "experimental guides",
            ProtocolElement::MeasuringInstruments => "measuring instruments",
            ProtocolElement::DataAnalysisTechniques => "data analysis techniques",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimenterRole {
    Designer,
    Trainer,
    Monitor,
    Measurer,
    Analyst,
}

impl ExperimenterRole {
    pub const ALL: [ExperimenterRole; 5] = [
        ExperimenterRole::Designer,
        ExperimenterRole::Trainer,
        ExperimenterRole::Monitor,
        ExperimenterRole::Measurer,
        ExperimenterRole::Analyst,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ExperimenterRole::Designer => "designer",
            ExperimenterRole::Trainer => "trainer",
            ExperimenterRole::Monitor => "monitor",
            ExperimenterRole::Measurer => "measurer",
            ExperimenterRole::Analyst => "analyst",
        }
    }

    pub fn label(self) -> &'static str {
        self.keyword()
    }
}

/// The aspect of the experimental setup a change modifies; exactly one per
/// change. A change touching several dimensions is recorded as several
/// changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dimension {
    Operationalization(OperationalizationElement),
    Population(String),
    Protocol(ProtocolElement),
    Experimenter(ExperimenterRole),
    Context(String),
}

impl Dimension {
    pub fn kind(&self) -> DimensionKind {
        match self {
            Dimension::Operationalization(_) => DimensionKind::Operationalization,
            Dimension::Population(_) => DimensionKind::Population,
            Dimension::Protocol(_) => DimensionKind::Protocol,
            Dimension::Experimenter(_) => DimensionKind::Experimenter,
            Dimension::Context(_) => DimensionKind::Context,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    Operationalization,
    Population,
    Protocol,
    Experimenter,
    Context,
}

impl DimensionKind {
    pub const ALL: [DimensionKind; 5] = [
        DimensionKind::Operationalization,
        DimensionKind::Population,
        DimensionKind::Protocol,
        DimensionKind::Experimenter,
        DimensionKind::Context,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DimensionKind::Operationalization => "operationalization",
            DimensionKind::Population => "population",
            DimensionKind::Protocol => "protocol",
            DimensionKind::Experimenter => "experimenter",
            DimensionKind::Context => "context",
        }
    }

    pub fn index(self) -> usize {
        match self {
            DimensionKind::Operationalization => 0,
            DimensionKind::Population => 1,
            DimensionKind::Protocol => 2,
            DimensionKind::Experimenter => 3,
            DimensionKind::Context => 4,
        }
    }
}

/// One named replication change: what the base study did, what this
/// replication does instead, why, along which dimension, and with what
/// impacts on validity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    /// 1-based position within the replication's change list.
    pub ordinal: u32,
    pub name: String,
    pub base_situation: String,
    pub replication_situation: String,
    pub purpose: String,
    pub dimension: Dimension,
    pub impacts: Vec<ChangeImpact>,
    pub comments: Option<String>,
    pub span: SourceSpan,
}

/// Goal of an original study: a free-form GQM statement or an explicit
/// cause/effect/population triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    Gqm(String),
    Structured {
        cause: String,
        effect: String,
        population: String,
    },
}

/// Identity and venue shared by original studies and replications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudyCore {
    pub acronym: Acronym,
    pub site: String,
    pub date: StudyDate,
    pub report_url: Option<String>,
    pub comments: Option<String>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OriginalStudy {
    pub core: StudyCore,
    pub goal: Goal,
    /// Context shared by every replication in the family.
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicationKind {
    Internal,
    External,
}

impl ReplicationKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ReplicationKind::Internal => "internal",
            ReplicationKind::External => "external",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ReplicationKind::Internal => "Internal",
            ReplicationKind::External => "External",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    ConfirmResults,
    GeneralizeResults,
    OvercomeLimitations,
}

impl Purpose {
    pub const ALL: [Purpose; 3] = [
        Purpose::ConfirmResults,
        Purpose::GeneralizeResults,
        Purpose::OvercomeLimitations,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Purpose::ConfirmResults => "confirm",
            Purpose::GeneralizeResults => "generalize",
            Purpose::OvercomeLimitations => "overcome",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Purpose::ConfirmResults => "Confirm results",
            Purpose::GeneralizeResults => "Generalize results",
            Purpose::OvercomeLimitations => "Overcome limitations of previous studies",
        }
    }
}

/// A replication of a base study (the original or a previous replication).
///
/// `purposes` is a set stored sorted in [`Purpose::ALL`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replication {
    pub core: StudyCore,
    pub kind: ReplicationKind,
    pub purposes: Vec<Purpose>,
    pub base_acronym: Acronym,
    pub changes: Vec<Change>,
}

impl Replication {
    /// Sum of effect values over all impacts of all changes, per validity
    /// type; validity types with no impact stay 0.
    pub fn net_effect(&self) -> Scores {
        let mut scores = Scores::default();
        for change in &self.changes {
            for impact in &change.impacts {
                scores.add(impact.validity, i64::from(impact.effect));
            }
        }
        scores
    }
}

/// A family: one original study plus the replications based on it,
/// in declaration order, labeled by its own acronym.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    pub acronym: Acronym,
    pub original: OriginalStudy,
    pub replications: Vec<Replication>,
    pub span: SourceSpan,
}

/// A study looked up inside a family: the original or one of its
/// replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyRef<'a> {
    Original(&'a OriginalStudy),
    Replication(&'a Replication),
}

impl<'a> StudyRef<'a> {
    pub fn core(&self) -> &'a StudyCore {
        match self {
            StudyRef::Original(o) => &o.core,
            StudyRef::Replication(r) => &r.core,
        }
    }

    pub fn acronym(&self) -> &'a Acronym {
        &self.core().acronym
    }

    pub fn is_original(&self) -> bool {
        matches!(self, StudyRef::Original(_))
    }
}

impl Family {
    /// Looks up a study by acronym and tags whether it is the original or a
    /// previous replication; reports use the tag to pick their wording.
    pub fn resolve_base(&self, acronym: &str) -> Result<StudyRef<'_>, ModelError> {
        if self.original.core.acronym == *acronym {
            return Ok(StudyRef::Original(&self.original));
        }
        self.replications
            .iter()
            .find(|r| r.core.acronym == *acronym)
            .map(StudyRef::Replication)
            .ok_or_else(|| ModelError::UnknownAcronym(acronym.to_string()))
    }

    /// The original plus every replication, in declaration order.
    pub fn studies(&self) -> impl Iterator<Item = StudyRef<'_>> {
        std::iter::once(StudyRef::Original(&self.original))
            .chain(self.replications.iter().map(StudyRef::Replication))
    }
}

/// Every family known to one toolchain run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub families: Vec<Family>,
}

impl Corpus {
    /// Finds a study by acronym anywhere in the corpus, with its family.
    pub fn find_study(&self, acronym: &str) -> Option<(&Family, StudyRef<'_>)> {
        self.families
            .iter()
            .find_map(|f| f.resolve_base(acronym).ok().map(|s| (f, s)))
    }

    /// Finds a family by its original study's acronym, falling back to the
    /// family's own label.
    pub fn find_family(&self, acronym: &str) -> Option<&Family> {
        self.families
            .iter()
            .find(|f| f.original.core.acronym == *acronym)
            .or_else(|| self.families.iter().find(|f| f.acronym == *acronym))
    }

    /// Copy with every span reset to a synthetic placeholder. Structural
    /// equality between corpora means equality of `without_spans` values;
    /// spans are parse artifacts, not data.
    pub fn without_spans(&self) -> Corpus {
        let mut c = self.clone();
        for family in &mut c.families {
            family.span = SourceSpan::synthetic("");
            family.original.core.span = SourceSpan::synthetic("");
            for r in &mut family.replications {
                r.core.span = SourceSpan::synthetic("");
                for ch in &mut r.changes {
                    ch.span = SourceSpan::synthetic("");
                    for imp in &mut ch.impacts {
                        imp.span = SourceSpan::synthetic("");
                    }
                }
            }
        }
        c
    }
}
