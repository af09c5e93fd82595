//! Benchmarks the corpus-level pipeline stages on a deterministic
//! synthetic corpus. Run once with the default features and once with
//! `--no-default-features` to compare the data-parallel and sequential
//! code paths; the group names carry the active mode.

use std::hint::black_box;

use caesar_kit as kit;
use criterion::{criterion_group, criterion_main, Criterion};

const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

const FAMILIES: usize = 40;
const REPLICATIONS: usize = 8;
const CHANGES: usize = 4;

fn synthetic_sources() -> Vec<kit::NamedSource> {
    let validities = ["conclusion", "internal", "construct", "external"];
    let dimensions = [
        "operationalization(treatments)",
        "population(\"experience of subjects\")",
        "protocol(experimental_design)",
        "experimenter(analyst)",
        "context(\"industrial setting\")",
    ];
    (0..FAMILIES)
        .map(|f| {
            let mut text = format!(
                "family Fam{f} {{\n  original study S{f} {{\n    site: \"Site {f}\"\n    \
                 date: 2000\n    goal {{ gqm: \"Quality under treatment {f}\" }}\n    \
                 description: \"Baseline study number {f}\"\n  }}\n"
            );
            for r in 1..=REPLICATIONS {
                let base = if r == 1 {
                    format!("S{f}")
                } else {
                    format!("S{f}-{}", r - 1)
                };
                text.push_str(&format!(
                    "  replication S{f}-{r} based on {base} {{\n    kind: internal\n    \
                     site: \"Site {f}\"\n    date: {}\n    purposes: confirm\n",
                    2000 + r
                ));
                for ch in 0..CHANGES {
                    let effect = ((f + r + ch) % 7) as i32 - 3;
                    let validity = validities[(f + r + ch) % validities.len()];
                    let impact = if effect == 0 {
                        format!("impact {validity}: 0")
                    } else {
                        format!("impact {validity}: {effect:+} because \"measured shift {ch}\"")
                    };
                    text.push_str(&format!(
                        "    change \"Change {r}.{ch}\" {{\n      base: \"old setup {ch}\"\n      \
                         replication: \"new setup {ch}\"\n      purpose: \"isolating factor {ch}\"\n      \
                         dimension: {}\n      {impact}\n    }}\n",
                        dimensions[(f + ch) % dimensions.len()]
                    ));
                }
                text.push_str("  }\n");
            }
            text.push_str("}\n");
            kit::NamedSource::new(format!("fam{f}.fam"), text)
        })
        .collect()
}

fn parsed_corpus(sources: &[kit::NamedSource]) -> kit::Corpus {
    let (corpus, diags) = kit::parse_sources(sources);
    assert!(
        diags.iter().all(|d| !d.is_error()),
        "synthetic corpus must parse: {diags:?}"
    );
    corpus
}

fn bench_parse(c: &mut Criterion) {
    let sources = synthetic_sources();
    let mut group = c.benchmark_group(format!("parse ({MODE})"));
    group.bench_function("corpus", |b| {
        b.iter(|| kit::parse_sources(black_box(&sources)))
    });
    group.finish();
}

fn bench_validate(c: &mut Criterion) {
    let corpus = parsed_corpus(&synthetic_sources());
    let mut group = c.benchmark_group(format!("validate ({MODE})"));
    group.bench_function("corpus", |b| b.iter(|| kit::validate(black_box(&corpus))));
    group.finish();
}

fn bench_stats(c: &mut Criterion) {
    let corpus = parsed_corpus(&synthetic_sources());
    let mut group = c.benchmark_group(format!("stats ({MODE})"));
    group.bench_function("corpus", |b| b.iter(|| kit::stats(black_box(&corpus))));
    group.finish();
}

fn bench_evolution(c: &mut Criterion) {
    let corpus = parsed_corpus(&synthetic_sources());
    let mut group = c.benchmark_group(format!("evolution ({MODE})"));
    group.bench_function("all families", |b| {
        b.iter(|| {
            corpus
                .families
                .iter()
                .map(|family| kit::evolution(black_box(family)).points.len())
                .sum::<usize>()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_parse, bench_validate, bench_stats, bench_evolution);
criterion_main!(benches);
