//! Toolkit for specifying and reporting replication changes in families of
//! empirical studies.
//!
//! A *family* of studies is an original study plus the replications that are
//! transitively based on it. Each replication records the deliberate changes
//! it makes to its base study, and each change carries its estimated impacts
//! on the four types of experimental validity. The crate provides:
//!
//! * a block-structured text format for whole families ([`parse`],
//!   [`parse_corpus`]) with positioned diagnostics and error recovery,
//! * semantic validation beyond the grammar ([`validate`]),
//! * validity-evolution analysis and corpus statistics ([`evolution`],
//!   [`stats`]),
//! * report rendering in text, Markdown, LaTeX, and HTML
//!   ([`render_context`], [`render_change`], [`render_family_report`]),
//! * an SVG line chart of validity evolution ([`evolution_svg`]),
//! * canonical JSON interchange and source re-emission ([`to_json`],
//!   [`from_json`], [`emit_dsl`]).
//!
//! With the default `parallel` feature, corpus-level operations fan out over
//! files and families with rayon; without it the same code paths run
//! sequentially.

pub mod analysis;
pub mod chart;
pub mod diag;
pub mod interchange;
pub mod model;
pub mod parser;
pub mod render;
pub mod validation;

mod par;

pub use analysis::{evolution, stats, CorpusStats, EvolutionPoint, EvolutionSeries, FamilyStats};
pub use chart::evolution_svg;
pub use diag::{sort_diagnostics, Code, Diagnostic, Severity, SourceSpan};
pub use interchange::{emit_dsl, from_json, to_json, SCHEMA_ID};
pub use model::{
    Acronym, Change, ChangeImpact, Corpus, Dimension, DimensionKind, Family, Goal, OriginalStudy,
    Purpose, Replication, ReplicationKind, Scores, StudyCore, StudyDate, StudyRef, Validity,
};
pub use parser::{parse, parse_corpus, parse_sources, NamedSource};
pub use render::{
    effect_phrase, render_change, render_context, render_family_report, render_study, Format,
};
pub use validation::validate;
