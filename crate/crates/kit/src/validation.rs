//! Semantic checks over a parsed corpus: everything the grammar cannot
//! express. Errors (E1xx) mark corpora that violate the model's
//! invariants; warnings (W2xx) mark suspicious but representable data.
//!
//! | code | meaning |
//! |------|---------|
//! | E101 | acronym or family label used twice |
//! | E102 | base acronym does not resolve within the family |
//! | E103 | base-reference chain never reaches the original study |
//! | E104 | one change impacts the same validity type twice |
//! | E105 | effect outside [-3, +3] |
//! | E106 | nonzero effect without a rationale |
//! | E107 | replication with an empty purposes list |
//! | W201 | replication dated earlier than its base study |
//! | W202 | change with no impacts |
//! | W203 | replication with no changes |
//!
//! E105 and E107 cannot come out of the parser (the grammar rejects
//! out-of-range effects and empty purpose lists); they guard values
//! arriving through the JSON importer or built in code.

use std::collections::{HashMap, HashSet};

use crate::diag::{sort_diagnostics, Code, Diagnostic, SourceSpan};
use crate::model::{Corpus, Family, Replication};
use crate::par;

/// Checks every rule against every family and returns all violations,
/// sorted by file, span, and code. An empty result means the corpus
/// satisfies the model's invariants.
pub fn validate(corpus: &Corpus) -> Vec<Diagnostic> {
    let mut diags = uniqueness(corpus);
    let per_family = par::map_ordered(&corpus.families, family_checks);
    diags.extend(per_family.into_iter().flatten());
    sort_diagnostics(&mut diags);
    diags
}

/// E101 over two namespaces: study acronyms are unique corpus-wide,
/// family labels are unique among family labels.
fn uniqueness(corpus: &Corpus) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut labels: HashMap<&str, &SourceSpan> = HashMap::new();
    let mut studies: HashMap<&str, &SourceSpan> = HashMap::new();

    for family in &corpus.families {
        let label = family.acronym.as_str();
        if let Some(first) = labels.get(label) {
            diags.push(Diagnostic::new(
                Code::E101,
                format!("duplicate family label `{label}` (already used at {first})"),
                family.span.clone(),
            ));
        } else {
            labels.insert(label, &family.span);
        }
        for study in family.studies() {
            let acronym = study.acronym().as_str();
            let span = &study.core().span;
            if let Some(first) = studies.get(acronym) {
                diags.push(Diagnostic::new(
                    Code::E101,
                    format!("duplicate acronym `{acronym}` (already used at {first})"),
                    span.clone(),
                ));
            } else {
                studies.insert(acronym, span);
            }
        }
    }
    diags
}

fn family_checks(family: &Family) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for replication in &family.replications {
        base_reference(family, replication, &mut diags);
        purposes(replication, &mut diags);
        impacts(replication, &mut diags);
        if replication.changes.is_empty() {
            diags.push(Diagnostic::new(
                Code::W203,
                format!(
                    "replication `{}` records no changes",
                    replication.core.acronym
                ),
                replication.core.span.clone(),
            ));
        }
    }
    diags
}

/// E102, E103, and W201, all anchored on the base reference.
fn base_reference(family: &Family, replication: &Replication, diags: &mut Vec<Diagnostic>) {
    let acronym = replication.core.acronym.as_str();
    let base = replication.base_acronym.as_str();
    let Ok(base_study) = family.resolve_base(base) else {
        diags.push(Diagnostic::new(
            Code::E102,
            format!(
                "base `{base}` of replication `{acronym}` does not resolve within family `{}`",
                family.acronym
            ),
            replication.core.span.clone(),
        ));
        return;
    };

    if replication
        .core
        .date
        .cmp_at_shared_precision(&base_study.core().date)
        == std::cmp::Ordering::Less
    {
        diags.push(Diagnostic::new(
            Code::W201,
            format!(
                "replication `{acronym}` ({}) is dated earlier than its base `{base}` ({})",
                replication.core.date,
                base_study.core().date
            ),
            replication.core.span.clone(),
        ));
    }

    // Walk the base chain; revisiting a study means the chain circles
    // instead of reaching the original. Chains that dead-end on a missing
    // acronym are left to the owner's E102.
    let original = family.original.core.acronym.as_str();
    let mut visited: HashSet<&str> = HashSet::from([acronym]);
    let mut current = base;
    loop {
        if current == original {
            return;
        }
        if !visited.insert(current) {
            diags.push(Diagnostic::new(
                Code::E103,
                format!(
                    "replication `{acronym}` never reaches the original study `{original}` \
                     (base-reference cycle through `{current}`)"
                ),
                replication.core.span.clone(),
            ));
            return;
        }
        match family
            .replications
            .iter()
            .find(|r| r.core.acronym == *current)
        {
            Some(r) => current = r.base_acronym.as_str(),
            None => return,
        }
    }
}

fn purposes(replication: &Replication, diags: &mut Vec<Diagnostic>) {
    if replication.purposes.is_empty() {
        diags.push(Diagnostic::new(
            Code::E107,
            format!(
                "replication `{}` declares no purposes (expected confirm, generalize, \
                 and/or overcome)",
                replication.core.acronym
            ),
            replication.core.span.clone(),
        ));
    }
}

/// E104, E105, E106, and W202 over every change of one replication.
fn impacts(replication: &Replication, diags: &mut Vec<Diagnostic>) {
    for change in &replication.changes {
        if change.impacts.is_empty() {
            diags.push(Diagnostic::new(
                Code::W202,
                format!("change \"{}\" records no impacts", change.name),
                change.span.clone(),
            ));
        }
        let mut seen = HashSet::new();
        for impact in &change.impacts {
            if !seen.insert(impact.validity) {
                diags.push(Diagnostic::new(
                    Code::E104,
                    format!(
                        "change \"{}\" impacts {} validity more than once",
                        change.name, impact.validity
                    ),
                    impact.span.clone(),
                ));
            }
            if !(-3..=3).contains(&impact.effect) {
                diags.push(Diagnostic::new(
                    Code::E105,
                    format!(
                        "effect {} on {} validity is outside [-3, +3]",
                        impact.effect, impact.validity
                    ),
                    impact.span.clone(),
                ));
            }
            let blank = impact
                .rationale
                .as_deref()
                .is_none_or(|r| r.trim().is_empty());
            if impact.effect != 0 && blank {
                diags.push(Diagnostic::new(
                    Code::E106,
                    format!(
                        "nonzero effect on {} validity requires a rationale",
                        impact.validity
                    ),
                    impact.span.clone(),
                ));
            }
        }
    }
}
