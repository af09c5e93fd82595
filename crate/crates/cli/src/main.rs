//! `caesar`, the command-line front end of the replication toolkit.
//!
//! Every subcommand parses and validates its input first, printing
//! diagnostics to stderr. Payload output goes to stdout, or to `--out`
//! with an atomic write. Exit codes: 0 for success (warnings allowed),
//! 1 when diagnostics contain errors, 2 for usage or I/O failures.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use caesar_kit as kit;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "caesar",
    version,
    about = "Specify, check, and report families of empirical studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate study files, reporting diagnostics.
    Check {
        /// Study files forming one corpus.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Summarize families, replications, and changes.
    Stats {
        /// Study files forming one corpus.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = StatsFormat::Table)]
        format: StatsFormat,
        /// Write the output to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the reporting template of one study.
    Render {
        /// Study files forming one corpus.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Acronym of the study to render.
        #[arg(long)]
        study: String,
        /// Output format.
        #[arg(long, value_enum, default_value_t = RenderFormat::Md)]
        format: RenderFormat,
        /// Write the output to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the full report of one family.
    Report {
        /// Study files forming one corpus.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Acronym of the family's original study (or the family label).
        #[arg(long)]
        family: String,
        /// Output format.
        #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
        format: ReportFormat,
        /// Write the output to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the validity evolution of one family.
    Evolution {
        /// Study files forming one corpus.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Acronym of the family's original study (or the family label).
        #[arg(long)]
        family: String,
        /// Output format.
        #[arg(long, value_enum, default_value_t = EvolutionFormat::Svg)]
        format: EvolutionFormat,
        /// Write the output to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the corpus as a canonical JSON document.
    Export {
        /// Study files forming one corpus.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Write the output to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a canonical JSON document back to study-file syntax.
    Import {
        /// JSON document to read.
        file: PathBuf,
        /// Write the output to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsFormat {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderFormat {
    Text,
    Md,
    Latex,
    Html,
}

impl RenderFormat {
    fn to_kit(self) -> kit::Format {
        match self {
            RenderFormat::Text => kit::Format::Text,
            RenderFormat::Md => kit::Format::Markdown,
            RenderFormat::Latex => kit::Format::Latex,
            RenderFormat::Html => kit::Format::Html,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Md,
    Latex,
    Html,
}

impl ReportFormat {
    fn to_kit(self) -> kit::Format {
        match self {
            ReportFormat::Md => kit::Format::Markdown,
            ReportFormat::Latex => kit::Format::Latex,
            ReportFormat::Html => kit::Format::Html,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EvolutionFormat {
    Svg,
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Check { files } => match load_corpus(&files) {
            Some(_) => Ok(ExitCode::SUCCESS),
            None => Ok(ExitCode::from(1)),
        },
        Command::Stats { files, format, out } => with_corpus(&files, out.as_deref(), |corpus| {
            let stats = kit::stats(corpus);
            Ok(match format {
                StatsFormat::Table => stats_table(&stats),
                StatsFormat::Csv => stats_csv(&stats),
                StatsFormat::Json => stats_json(&stats),
            })
        }),
        Command::Render {
            files,
            study,
            format,
            out,
        } => with_corpus(&files, out.as_deref(), |corpus| {
            let (family, _) = corpus
                .find_study(&study)
                .ok_or_else(|| format!("no study named `{study}` in the corpus"))?;
            kit::render_study(family, &study, format.to_kit()).map_err(|e| e.to_string())
        }),
        Command::Report {
            files,
            family,
            format,
            out,
        } => with_corpus(&files, out.as_deref(), |corpus| {
            let family = find_family(corpus, &family)?;
            kit::render_family_report(family, format.to_kit()).map_err(|e| e.to_string())
        }),
        Command::Evolution {
            files,
            family,
            format,
            out,
        } => with_corpus(&files, out.as_deref(), |corpus| {
            let family = find_family(corpus, &family)?;
            let series = kit::evolution(family);
            match format {
                EvolutionFormat::Svg => {
                    kit::evolution_svg(&series, 800, 480).map_err(|e| e.to_string())
                }
                EvolutionFormat::Csv => Ok(series.to_csv()),
                EvolutionFormat::Json => Ok(series.to_json()),
            }
        }),
        Command::Export { files, out } => {
            with_corpus(&files, out.as_deref(), |corpus| Ok(kit::to_json(corpus)))
        }
        Command::Import { file, out } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
            let (corpus, diags) = kit::from_json(&text, &file.display().to_string());
            print_diagnostics(&diags);
            match corpus {
                Some(corpus) => {
                    write_payload(out.as_deref(), &kit::emit_dsl(&corpus))?;
                    Ok(ExitCode::SUCCESS)
                }
                None => Ok(ExitCode::from(1)),
            }
        }
    }
}

/// Parses and validates the corpus, printing every diagnostic. Returns
/// the corpus only when no diagnostic is an error.
fn load_corpus(files: &[PathBuf]) -> Option<kit::Corpus> {
    let (corpus, mut diags) = kit::parse_corpus(files);
    diags.extend(kit::validate(&corpus));
    kit::sort_diagnostics(&mut diags);
    print_diagnostics(&diags);
    if diags.iter().any(kit::Diagnostic::is_error) {
        None
    } else {
        Some(corpus)
    }
}

fn with_corpus(
    files: &[PathBuf],
    out: Option<&Path>,
    payload: impl FnOnce(&kit::Corpus) -> Result<String, String>,
) -> Result<ExitCode, String> {
    match load_corpus(files) {
        None => Ok(ExitCode::from(1)),
        Some(corpus) => {
            let payload = payload(&corpus)?;
            write_payload(out, &payload)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Families are addressed by their original study's acronym, with the
/// family label accepted as a fallback.
fn find_family<'a>(corpus: &'a kit::Corpus, acronym: &str) -> Result<&'a kit::Family, String> {
    corpus
        .find_family(acronym)
        .ok_or_else(|| format!("no family with original study or label `{acronym}`"))
}

fn print_diagnostics(diags: &[kit::Diagnostic]) {
    if diags.is_empty() {
        return;
    }
    let colored = std::env::var_os("CAESAR_NO_COLOR").is_none_or(|v| v != "1")
        && std::io::stderr().is_terminal();
    for diag in diags {
        if colored {
            let tint = match diag.severity {
                kit::Severity::Error => "\x1b[31m",
                kit::Severity::Warning => "\x1b[33m",
            };
            eprintln!(
                "{}: {tint}{} {}\x1b[0m: {}",
                diag.span, diag.severity, diag.code, diag.message
            );
        } else {
            eprintln!("{diag}");
        }
    }
}

fn write_payload(out: Option<&Path>, payload: &str) -> Result<(), String> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(payload.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
        Some(path) => atomic_write(path, payload),
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a half-written file.
fn atomic_write(path: &Path, payload: &str) -> Result<(), String> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| format!("cannot create a temporary file in {}: {e}", dir.display()))?;
    tmp.write_all(payload.as_bytes())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    tmp.persist(path)
        .map_err(|e| format!("cannot replace {}: {e}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct StatsRow<'a> {
    family: &'a str,
    original: &'a str,
    replications: usize,
    changes: usize,
}

#[derive(Serialize)]
struct StatsTotals {
    families: usize,
    replications: usize,
    changes: usize,
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    families: Vec<StatsRow<'a>>,
    totals: StatsTotals,
}

fn stats_rows(stats: &kit::CorpusStats) -> StatsDoc<'_> {
    StatsDoc {
        families: stats
            .families
            .iter()
            .map(|f| StatsRow {
                family: f.family.as_str(),
                original: f.original.as_str(),
                replications: f.replications,
                changes: f.changes,
            })
            .collect(),
        totals: StatsTotals {
            families: stats.family_count(),
            replications: stats.total_replications,
            changes: stats.total_changes,
        },
    }
}

fn stats_table(stats: &kit::CorpusStats) -> String {
    let doc = stats_rows(stats);
    let mut grid: Vec<[String; 4]> = vec![[
        "family".to_string(),
        "original".to_string(),
        "replications".to_string(),
        "changes".to_string(),
    ]];
    for row in &doc.families {
        grid.push([
            row.family.to_string(),
            row.original.to_string(),
            row.replications.to_string(),
            row.changes.to_string(),
        ]);
    }
    grid.push([
        format!("total ({} families)", doc.totals.families),
        "-".to_string(),
        doc.totals.replications.to_string(),
        doc.totals.changes.to_string(),
    ]);

    let widths: Vec<usize> = (0..4)
        .map(|c| grid.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        let line = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<width$}", width = widths[c]))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn stats_csv(stats: &kit::CorpusStats) -> String {
    let doc = stats_rows(stats);
    let mut out = String::from("family,original,replications,changes\n");
    for row in &doc.families {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.family, row.original, row.replications, row.changes
        ));
    }
    out
}

fn stats_json(stats: &kit::CorpusStats) -> String {
    let mut text =
        serde_json::to_string_pretty(&stats_rows(stats)).expect("statistics serialize");
    text.push('\n');
    text
}
