//! Strategies generating well-formed corpora: unique acronyms, strictly
//! increasing dates inside each family, bases resolving to earlier
//! studies, and a rationale wherever a nonzero effect requires one.
//! Families come out with their replications already in canonical order.

#![allow(dead_code)]

use caesar_kit::model::{
    Acronym, Change, ChangeImpact, Corpus, Dimension, ExperimenterRole, Family, Goal,
    OperationalizationElement, OriginalStudy, ProtocolElement, Purpose, Replication,
    ReplicationKind, StudyCore, StudyDate, Validity,
};
use caesar_kit::SourceSpan;
use proptest::prelude::*;

pub fn arb_text() -> impl Strategy<Value = String> {
    prop_oneof![
        6 => "[a-zA-Z][a-zA-Z0-9 ,.]{0,28}[a-zA-Z0-9]",
        1 => Just("a \"quoted\" fragment".to_string()),
        1 => Just("a path like C:\\tools\\bin".to_string()),
        1 => Just("first line\nsecond line".to_string()),
        1 => Just("caf\u{e9} n\u{fa}mero \u{65e5}\u{672c}".to_string()),
    ]
}

fn arb_goal() -> impl Strategy<Value = Goal> {
    prop_oneof![
        arb_text().prop_map(Goal::Gqm),
        (arb_text(), arb_text(), arb_text()).prop_map(|(cause, effect, population)| {
            Goal::Structured {
                cause,
                effect,
                population,
            }
        }),
    ]
}

fn arb_dimension() -> impl Strategy<Value = Dimension> {
    prop_oneof![
        prop::sample::select(&OperationalizationElement::ALL[..])
            .prop_map(Dimension::Operationalization),
        arb_text().prop_map(Dimension::Population),
        prop::sample::select(&ProtocolElement::ALL[..]).prop_map(Dimension::Protocol),
        prop::sample::select(&ExperimenterRole::ALL[..]).prop_map(Dimension::Experimenter),
        arb_text().prop_map(Dimension::Context),
    ]
}

fn arb_impacts() -> impl Strategy<Value = Vec<ChangeImpact>> {
    prop::sample::subsequence(Validity::ALL.to_vec(), 0..=4).prop_flat_map(|validities| {
        let n = validities.len();
        (
            Just(validities),
            prop::collection::vec(
                (-3i32..=3, prop::option::of(arb_text()), arb_text()),
                n,
            ),
        )
            .prop_map(|(validities, parts)| {
                validities
                    .into_iter()
                    .zip(parts)
                    .map(|(validity, (effect, optional, required))| ChangeImpact {
                        validity,
                        effect,
                        rationale: if effect == 0 { optional } else { Some(required) },
                        span: SourceSpan::synthetic(""),
                    })
                    .collect()
            })
    })
}

fn arb_change() -> impl Strategy<Value = Change> {
    (
        arb_text(),
        arb_text(),
        arb_text(),
        arb_text(),
        arb_dimension(),
        arb_impacts(),
        prop::option::of(arb_text()),
    )
        .prop_map(
            |(name, base, replication, purpose, dimension, impacts, comments)| Change {
                ordinal: 0,
                name,
                base_situation: base,
                replication_situation: replication,
                purpose,
                dimension,
                impacts,
                comments,
                span: SourceSpan::synthetic(""),
            },
        )
}

/// Site, date shape (precision selector, month, day), report, comments.
/// The year is assigned by position so family dates strictly increase.
type CoreParts = (String, (u8, i64, i64), Option<String>, Option<String>);

fn arb_core_parts() -> impl Strategy<Value = CoreParts> {
    (
        arb_text(),
        (0u8..3, 1i64..=12, 1i64..=28),
        prop::option::of(arb_text()),
        prop::option::of(arb_text()),
    )
}

type ReplicationParts = (CoreParts, bool, Vec<Purpose>, usize, Vec<Change>);

fn arb_replication_parts(max_changes: usize) -> impl Strategy<Value = ReplicationParts> {
    (
        arb_core_parts(),
        any::<bool>(),
        prop::sample::subsequence(Purpose::ALL.to_vec(), 1..=3),
        any::<usize>(),
        prop::collection::vec(arb_change(), 0..=max_changes),
    )
}

type FamilyParts = (Goal, String, CoreParts, Vec<ReplicationParts>);

fn arb_family_parts(
    max_replications: usize,
    max_changes: usize,
) -> impl Strategy<Value = FamilyParts> {
    (
        arb_goal(),
        arb_text(),
        arb_core_parts(),
        prop::collection::vec(arb_replication_parts(max_changes), 0..=max_replications),
    )
}

fn build_date(shape: (u8, i64, i64), year: i64) -> StudyDate {
    let (precision, month, day) = shape;
    match precision {
        0 => StudyDate::year(year),
        1 => StudyDate::year_month(year, month),
        _ => StudyDate::full(year, month, day),
    }
    .expect("generated dates are in range")
}

fn build_core(acronym: String, year: i64, parts: CoreParts) -> StudyCore {
    let (site, date_shape, report_url, comments) = parts;
    StudyCore {
        acronym: Acronym::new(acronym).expect("generated acronyms are well formed"),
        site,
        date: build_date(date_shape, year),
        report_url,
        comments,
        span: SourceSpan::synthetic(""),
    }
}

fn build_family(index: usize, parts: FamilyParts) -> Family {
    let (goal, description, original_parts, replication_parts) = parts;
    let base_year = 1900 + (index as i64 * 7) % 80;
    let original_acronym = format!("F{index}S");
    let original = OriginalStudy {
        core: build_core(original_acronym.clone(), base_year, original_parts),
        goal,
        description,
    };
    let replications = replication_parts
        .into_iter()
        .enumerate()
        .map(|(i, (core_parts, external, purposes, base_selector, mut changes))| {
            let r = i + 1;
            for (c, change) in changes.iter_mut().enumerate() {
                change.ordinal = (c + 1) as u32;
            }
            let base_index = base_selector % r;
            let base = if base_index == 0 {
                original_acronym.clone()
            } else {
                format!("F{index}R{base_index}")
            };
            Replication {
                core: build_core(format!("F{index}R{r}"), base_year + r as i64, core_parts),
                kind: if external {
                    ReplicationKind::External
                } else {
                    ReplicationKind::Internal
                },
                purposes,
                base_acronym: Acronym::new(base).expect("generated acronyms are well formed"),
                changes,
            }
        })
        .collect();
    Family {
        acronym: Acronym::new(format!("F{index}")).expect("generated acronyms are well formed"),
        original,
        replications,
        span: SourceSpan::synthetic(""),
    }
}

pub fn arb_family(
    index: usize,
    max_replications: usize,
    max_changes: usize,
) -> impl Strategy<Value = Family> {
    arb_family_parts(max_replications, max_changes)
        .prop_map(move |parts| build_family(index, parts))
}

pub fn arb_corpus(
    max_families: usize,
    max_replications: usize,
    max_changes: usize,
) -> impl Strategy<Value = Corpus> {
    prop::collection::vec(
        arb_family_parts(max_replications, max_changes),
        0..=max_families,
    )
    .prop_map(|all_parts| Corpus {
        families: all_parts
            .into_iter()
            .enumerate()
            .map(|(i, parts)| build_family(i, parts))
            .collect(),
    })
}
