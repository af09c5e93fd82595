//! Validity-evolution series across a family and corpus-level statistics.
//!
//! The evolution of a family is the cumulative sum of impact effects,
//! validity type by validity type, across its studies in canonical order:
//! the original study first (all types start at zero), then the
//! replications by date ascending, with ties broken by topological depth
//! from the original and then by acronym. Scores accumulate over the whole
//! family sequence and are never clamped, so cumulative values may leave
//! [-3, +3].

use std::collections::HashMap;

use serde::Serialize;

use crate::model::{
    Acronym, Corpus, DimensionKind, Family, Replication, Scores, StudyDate, Validity,
};
use crate::par;

/// One study's position in a family's evolution: its cumulative scores,
/// one per validity type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionPoint {
    pub acronym: Acronym,
    pub date: StudyDate,
    pub scores: Scores,
}

/// Cumulative validity scores across one family, in canonical study order.
/// The first point is the original study and scores all zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvolutionSeries {
    pub family_acronym: Acronym,
    pub points: Vec<EvolutionPoint>,
}

impl EvolutionSeries {
    /// CSV with one row per point; dates in ISO-8601 at stored precision.
    /// Acronyms and dates cannot contain separators, so no quoting is
    /// needed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("acronym,date,conclusion,internal,construct,external\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.acronym,
                p.date,
                p.scores.get(Validity::Conclusion),
                p.scores.get(Validity::Internal),
                p.scores.get(Validity::Construct),
                p.scores.get(Validity::External),
            ));
        }
        out
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Point<'a> {
            acronym: &'a str,
            date: String,
            conclusion: i64,
            internal: i64,
            construct: i64,
            external: i64,
        }
        #[derive(Serialize)]
        struct Series<'a> {
            family: &'a str,
            points: Vec<Point<'a>>,
        }
        let series = Series {
            family: self.family_acronym.as_str(),
            points: self
                .points
                .iter()
                .map(|p| Point {
                    acronym: p.acronym.as_str(),
                    date: p.date.to_string(),
                    conclusion: p.scores.get(Validity::Conclusion),
                    internal: p.scores.get(Validity::Internal),
                    construct: p.scores.get(Validity::Construct),
                    external: p.scores.get(Validity::External),
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&series).expect("plain data serializes");
        out.push('\n');
        out
    }
}

/// Replications of `family` in canonical order: by date ascending, ties
/// broken by topological depth from the original, then by acronym.
pub fn canonical_replications(family: &Family) -> Vec<&Replication> {
    let depths = base_chain_depths(family);
    let mut replications: Vec<&Replication> = family.replications.iter().collect();
    replications.sort_by(|a, b| {
        date_key(&a.core.date)
            .cmp(&date_key(&b.core.date))
            .then_with(|| {
                depths
                    .get(a.core.acronym.as_str())
                    .cmp(&depths.get(b.core.acronym.as_str()))
            })
            .then_with(|| a.core.acronym.cmp(&b.core.acronym))
    });
    replications
}

fn date_key(date: &StudyDate) -> (u16, u8, u8) {
    (
        date.year_value(),
        date.month_value().unwrap_or(0),
        date.day_value().unwrap_or(0),
    )
}

/// Distance from the original along base references. The original is 0;
/// studies whose chain never reaches it (possible only in invalid
/// families) share the maximum depth so ordering stays total.
fn base_chain_depths(family: &Family) -> HashMap<&str, u32> {
    let mut depths: HashMap<&str, u32> = HashMap::new();
    depths.insert(family.original.core.acronym.as_str(), 0);
    loop {
        let mut settled_one = false;
        for r in &family.replications {
            let acronym = r.core.acronym.as_str();
            if depths.contains_key(acronym) {
                continue;
            }
            if let Some(base_depth) = depths.get(r.base_acronym.as_str()).copied() {
                depths.insert(acronym, base_depth + 1);
                settled_one = true;
            }
        }
        if !settled_one {
            break;
        }
    }
    for r in &family.replications {
        depths.entry(r.core.acronym.as_str()).or_insert(u32::MAX);
    }
    depths
}

/// Cumulative validity scores across the family in canonical order. The
/// original study contributes zero; every later point adds that
/// replication's net effect to the running total.
pub fn evolution(family: &Family) -> EvolutionSeries {
    let ordered = canonical_replications(family);
    let mut points = Vec::with_capacity(1 + ordered.len());
    let mut scores = Scores::default();
    points.push(EvolutionPoint {
        acronym: family.original.core.acronym.clone(),
        date: family.original.core.date,
        scores,
    });
    for replication in ordered {
        scores = scores.plus(&replication.net_effect());
        points.push(EvolutionPoint {
            acronym: replication.core.acronym.clone(),
            date: replication.core.date,
            scores,
        });
    }
    EvolutionSeries {
        family_acronym: family.acronym.clone(),
        points,
    }
}

/// Counts for one family: replications, changes, changes per dimension
/// kind, and impacts with nonzero effect per validity type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyStats {
    pub family: Acronym,
    pub original: Acronym,
    pub replications: usize,
    pub changes: usize,
    dimension_counts: [usize; 5],
    validity_nonzero: [usize; 4],
}

impl FamilyStats {
    pub fn dimension_count(&self, kind: DimensionKind) -> usize {
        self.dimension_counts[kind.index()]
    }

    pub fn nonzero_impact_count(&self, validity: Validity) -> usize {
        self.validity_nonzero[validity_index(validity)]
    }
}

/// Per-family counts plus corpus totals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusStats {
    pub families: Vec<FamilyStats>,
    pub total_replications: usize,
    pub total_changes: usize,
    total_dimension_counts: [usize; 5],
    total_validity_nonzero: [usize; 4],
}

impl CorpusStats {
    pub fn family_count(&self) -> usize {
        self.families.len()
    }

    pub fn total_dimension_count(&self, kind: DimensionKind) -> usize {
        self.total_dimension_counts[kind.index()]
    }

    pub fn total_nonzero_impact_count(&self, validity: Validity) -> usize {
        self.total_validity_nonzero[validity_index(validity)]
    }
}

fn validity_index(validity: Validity) -> usize {
    match validity {
        Validity::Conclusion => 0,
        Validity::Internal => 1,
        Validity::Construct => 2,
        Validity::External => 3,
    }
}

/// Exact counts per family and corpus-wide totals; families may be
/// counted in parallel.
pub fn stats(corpus: &Corpus) -> CorpusStats {
    let families = par::map_ordered(&corpus.families, family_stats);
    let mut totals = CorpusStats {
        families,
        ..CorpusStats::default()
    };
    for f in &totals.families {
        totals.total_replications += f.replications;
        totals.total_changes += f.changes;
        for i in 0..5 {
            totals.total_dimension_counts[i] += f.dimension_counts[i];
        }
        for i in 0..4 {
            totals.total_validity_nonzero[i] += f.validity_nonzero[i];
        }
    }
    totals
}

fn family_stats(family: &Family) -> FamilyStats {
    let mut dimension_counts = [0usize; 5];
    let mut validity_nonzero = [0usize; 4];
    let mut changes = 0usize;
    for replication in &family.replications {
        for change in &replication.changes {
            changes += 1;
            dimension_counts[change.dimension.kind().index()] += 1;
            for impact in &change.impacts {
                if impact.effect != 0 {
                    validity_nonzero[validity_index(impact.validity)] += 1;
                }
            }
        }
    }
    FamilyStats {
        family: family.acronym.clone(),
        original: family.original.core.acronym.clone(),
        replications: family.replications.len(),
        changes,
        dimension_counts,
        validity_nonzero,
    }
}
