//! Renders replication context and change templates as two-column tables
//! in four formats, filling the fields with parameterized sentences.
//!
//! All output is deterministic byte-for-byte for a given input and format.
//! Text and Markdown are fragments, LaTeX is a fragment for a `tabular`-
//! capable preamble (documented in the README), and HTML is a standalone
//! document.

use std::fmt::Write as _;

use crate::analysis::{canonical_replications, evolution};
use crate::model::{
    Change, Dimension, Family, Goal, ModelError, OriginalStudy, Replication, StudyRef, Validity,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Text,
    Markdown,
    Latex,
    Html,
}

/// Phrase for one impact effect on the seven-point scale, combining the
/// magnitude word, the direction, and the signed number.
///
/// Panics outside [-3, +3]; validation rejects such values before any
/// rendering happens.
pub fn effect_phrase(effect: i32) -> String {
    assert!(
        (-3..=3).contains(&effect),
        "effect {effect} is outside [-3, +3]"
    );
    if effect == 0 {
        return "does not affect (0)".to_string();
    }
    let magnitude = match effect.abs() {
        1 => "slightly",
        2 => "moderately",
        _ => "substantially",
    };
    let direction = if effect > 0 { "increases" } else { "decreases" };
    format!("{magnitude} {direction} ({effect:+})")
}

/// `+n`/`-n` for nonzero values, plain `0` otherwise, matching the effect
/// annotations in the templates.
fn signed(n: i64) -> String {
    if n == 0 {
        "0".to_string()
    } else {
        format!("{n:+}")
    }
}

/// One template row: a label cell and a content cell made of lines and
/// bullets.
struct Row {
    label: String,
    blocks: Vec<Block>,
}

enum Block {
    Line(String),
    Bullet(String),
}

struct Table {
    rows: Vec<Row>,
}

impl Table {
    fn new() -> Table {
        Table { rows: Vec::new() }
    }

    fn row(&mut self, label: impl Into<String>) -> &mut Vec<Block> {
        self.rows.push(Row {
            label: label.into(),
            blocks: Vec::new(),
        });
        &mut self.rows.last_mut().expect("just pushed").blocks
    }

    fn line_row(&mut self, label: impl Into<String>, text: impl Into<String>) {
        self.row(label).push(Block::Line(text.into()));
    }
}

/// The dimension sentence of the change template.
fn dimension_sentence(dimension: &Dimension) -> String {
    match dimension {
        Dimension::Operationalization(e) => {
            format!("Operationalization, specifically, the {}", e.label())
        }
        Dimension::Population(property) => {
            format!("Population, specifically, the {property}")
        }
        Dimension::Protocol(e) => format!("Protocol, specifically, the {}", e.label()),
        Dimension::Experimenter(role) => {
            format!("Experimenter, specifically, the role of {}", role.label())
        }
        Dimension::Context(property) => format!("Context, specifically, the {property}"),
    }
}

fn goal_sentence(goal: &Goal) -> String {
    match goal {
        Goal::Gqm(statement) => statement.clone(),
        Goal::Structured {
            cause,
            effect,
            population,
        } => format!("Effect of {cause} on {effect} for {population}"),
    }
}

fn change_table(change: &Change, replication_acronym: &str) -> Table {
    let mut table = Table::new();
    table.line_row(
        format!("Change #{}", change.ordinal),
        format!("{} (replication {replication_acronym})", change.name),
    );

    let description = table.row("Description");
    description.push(Block::Line(format!("Originally, {}.", change.base_situation)));
    description.push(Block::Line(format!(
        "In this replication, {}.",
        change.replication_situation
    )));
    description.push(Block::Line(format!("With the purpose of {}", change.purpose)));

    table.line_row("Dimension", dimension_sentence(&change.dimension));

    let effects = table.row("Effects on Validity");
    if change.impacts.is_empty() {
        effects.push(Block::Line("none recorded".to_string()));
    } else {
        for impact in &change.impacts {
            let mut sentence = format!(
                "This change {} {} validity",
                effect_phrase(impact.effect),
                impact.validity
            );
            if let Some(rationale) = impact
                .rationale
                .as_deref()
                .filter(|r| !r.trim().is_empty())
            {
                write!(sentence, " because {rationale}").expect("writing to String");
            }
            effects.push(Block::Bullet(sentence));
        }
    }

    if let Some(comments) = &change.comments {
        table.line_row("Comments", comments.clone());
    }
    table
}

fn context_table(replication: &Replication, family: &Family) -> Result<Table, ModelError> {
    let base = family.resolve_base(replication.base_acronym.as_str())?;
    let mut table = Table::new();

    let head = table.row("Replication");
    head.push(Block::Line(replication.core.acronym.to_string()));
    if let Some(url) = &replication.core.report_url {
        head.push(Block::Line(format!("Report: {url}")));
    }
    let base_role = if base.is_original() {
        "original study"
    } else {
        "previous replication"
    };
    head.push(Block::Line(format!(
        "{} replication based on {} {base_role}",
        replication.kind.label(),
        base.acronym()
    )));

    let original = table.row("Original Study");
    original.push(Block::Line(goal_sentence(&family.original.goal)));
    original.push(Block::Line(family.original.description.clone()));

    let site_and_date = table.row("Site and Date");
    site_and_date.push(Block::Line(format!(
        "The base experiment was carried out at {} in {}",
        base.core().site,
        base.core().date
    )));
    site_and_date.push(Block::Line(format!(
        "This replication was carried out at {} in {}",
        replication.core.site, replication.core.date
    )));

    let purposes = table.row("Purposes");
    for purpose in &replication.purposes {
        purposes.push(Block::Bullet(purpose.label().to_string()));
    }

    let net = replication.net_effect();
    let series = evolution(family);
    let cumulative = series
        .points
        .iter()
        .find(|p| p.acronym == replication.core.acronym)
        .map(|p| p.scores)
        .unwrap_or_default();
    let effects = table.row("Effects on Validity");
    for validity in Validity::ALL {
        effects.push(Block::Line(format!(
            "{validity} validity: net {}, cumulative {}",
            signed(net.get(validity)),
            signed(cumulative.get(validity))
        )));
    }

    if let Some(comments) = &replication.core.comments {
        table.line_row("Comments", comments.clone());
    }
    Ok(table)
}

fn original_table(original: &OriginalStudy) -> Table {
    let mut table = Table::new();
    let head = table.row("Original Study");
    head.push(Block::Line(original.core.acronym.to_string()));
    if let Some(url) = &original.core.report_url {
        head.push(Block::Line(format!("Report: {url}")));
    }
    table.line_row("Goal", goal_sentence(&original.goal));
    table.line_row("Description", original.description.clone());
    table.line_row(
        "Site and Date",
        format!(
            "The original study was carried out at {} in {}",
            original.core.site, original.core.date
        ),
    );
    if let Some(comments) = &original.core.comments {
        table.line_row("Comments", comments.clone());
    }
    table
}

/// The Fig. 4-shaped change template for one change.
pub fn render_change(change: &Change, replication_acronym: &str, format: Format) -> String {
    let body = write_table(&change_table(change, replication_acronym), format);
    finish(
        format,
        &format!("Change #{} of {replication_acronym}", change.ordinal),
        body,
    )
}

/// The Fig. 3-shaped context template for one replication, including the
/// net and cumulative validity summary.
pub fn render_context(
    replication: &Replication,
    family: &Family,
    format: Format,
) -> Result<String, ModelError> {
    let body = write_table(&context_table(replication, family)?, format);
    Ok(finish(
        format,
        &format!("Replication {}", replication.core.acronym),
        body,
    ))
}

/// Full report for a family: original-study header, per replication the
/// context template and all change templates in canonical order, and the
/// evolution table.
pub fn render_family_report(family: &Family, format: Format) -> Result<String, ModelError> {
    let mut body = String::new();
    heading(&mut body, 1, &format!("Family {}", family.acronym), format);
    body.push_str(&write_table(&original_table(&family.original), format));

    for replication in canonical_replications(family) {
        heading(
            &mut body,
            2,
            &format!("Replication {}", replication.core.acronym),
            format,
        );
        body.push_str(&write_table(&context_table(replication, family)?, format));
        for change in &replication.changes {
            body.push_str(&write_table(
                &change_table(change, replication.core.acronym.as_str()),
                format,
            ));
        }
    }

    heading(&mut body, 2, "Validity Evolution", format);
    body.push_str(&write_grid(&evolution_grid(family), format));
    Ok(finish(
        format,
        &format!("Family {}", family.acronym),
        body,
    ))
}

/// Renders one study of the family: the context and change templates when
/// the acronym names a replication, the original-study header when it
/// names the original.
pub fn render_study(family: &Family, acronym: &str, format: Format) -> Result<String, ModelError> {
    match family.resolve_base(acronym)? {
        StudyRef::Original(original) => {
            let body = write_table(&original_table(original), format);
            Ok(finish(
                format,
                &format!("Original Study {}", original.core.acronym),
                body,
            ))
        }
        StudyRef::Replication(replication) => {
            let mut body = write_table(&context_table(replication, family)?, format);
            for change in &replication.changes {
                body.push_str(&write_table(
                    &change_table(change, replication.core.acronym.as_str()),
                    format,
                ));
            }
            Ok(finish(
                format,
                &format!("Replication {}", replication.core.acronym),
                body,
            ))
        }
    }
}

/// Header and rows of the evolution table, mirroring the CSV columns.
fn evolution_grid(family: &Family) -> Vec<Vec<String>> {
    let series = evolution(family);
    let mut grid = vec![vec![
        "acronym".to_string(),
        "date".to_string(),
        "conclusion".to_string(),
        "internal".to_string(),
        "construct".to_string(),
        "external".to_string(),
    ]];
    for point in &series.points {
        grid.push(vec![
            point.acronym.to_string(),
            point.date.to_string(),
            point.scores.get(Validity::Conclusion).to_string(),
            point.scores.get(Validity::Internal).to_string(),
            point.scores.get(Validity::Construct).to_string(),
            point.scores.get(Validity::External).to_string(),
        ]);
    }
    grid
}

fn heading(out: &mut String, level: u8, text: &str, format: Format) {
    match format {
        Format::Text => {
            out.push_str(text);
            out.push('\n');
            let underline = if level == 1 { '=' } else { '-' };
            out.extend(std::iter::repeat_n(underline, text.chars().count()));
            out.push_str("\n\n");
        }
        Format::Markdown => {
            for _ in 0..level {
                out.push('#');
            }
            out.push(' ');
            out.push_str(&escape_markdown(text));
            out.push_str("\n\n");
        }
        Format::Latex => {
            let command = if level == 1 { "section*" } else { "subsection*" };
            let _ = writeln!(out, "\\{command}{{{}}}\n", escape_latex(text));
        }
        Format::Html => {
            let _ = writeln!(out, "<h{level}>{}</h{level}>", escape_html(text));
        }
    }
}

fn write_table(table: &Table, format: Format) -> String {
    match format {
        Format::Text => text_table(table),
        Format::Markdown => markdown_table(table),
        Format::Latex => latex_table(table),
        Format::Html => html_table(table),
    }
}

fn text_table(table: &Table) -> String {
    let width = table
        .rows
        .iter()
        .map(|r| r.label.chars().count())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for row in &table.rows {
        let mut first = true;
        for block in &row.blocks {
            let (prefix, text) = match block {
                Block::Line(t) => ("", t),
                Block::Bullet(t) => ("- ", t),
            };
            for line in text.split('\n') {
                let label = if first { row.label.as_str() } else { "" };
                let _ = writeln!(out, "{label:<width$} | {prefix}{line}");
                first = false;
            }
        }
    }
    out.push('\n');
    out
}

fn markdown_table(table: &Table) -> String {
    let mut out = String::from("| | |\n|---|---|\n");
    for row in &table.rows {
        let cell = row
            .blocks
            .iter()
            .map(|block| match block {
                Block::Line(t) => escape_markdown(t),
                Block::Bullet(t) => format!("\u{2022} {}", escape_markdown(t)),
            })
            .collect::<Vec<_>>()
            .join("<br>");
        let _ = writeln!(out, "| **{}** | {cell} |", escape_markdown(&row.label));
    }
    out.push('\n');
    out
}

fn latex_table(table: &Table) -> String {
    let mut out = String::from("\\begin{tabular}{|l|p{0.72\\textwidth}|}\n\\hline\n");
    for row in &table.rows {
        let cell = row
            .blocks
            .iter()
            .map(|block| match block {
                Block::Line(t) => escape_latex(t),
                Block::Bullet(t) => format!("\\textbullet~{}", escape_latex(t)),
            })
            .collect::<Vec<_>>()
            .join(" \\newline ");
        let _ = writeln!(
            out,
            "\\textbf{{{}}} & {cell} \\\\\n\\hline",
            escape_latex(&row.label)
        );
    }
    out.push_str("\\end{tabular}\n\n");
    out
}

fn html_table(table: &Table) -> String {
    let mut out = String::from("<table>\n");
    for row in &table.rows {
        let mut cell = String::new();
        let mut bullets: Vec<&String> = Vec::new();
        let flush = |cell: &mut String, bullets: &mut Vec<&String>| {
            if bullets.is_empty() {
                return;
            }
            cell.push_str("<ul>");
            for b in bullets.drain(..) {
                let _ = write!(cell, "<li>{}</li>", escape_html(b));
            }
            cell.push_str("</ul>");
        };
        for block in &row.blocks {
            match block {
                Block::Line(t) => {
                    flush(&mut cell, &mut bullets);
                    if !cell.is_empty() && !cell.ends_with("</ul>") {
                        cell.push_str("<br>");
                    }
                    cell.push_str(&escape_html(t));
                }
                Block::Bullet(t) => bullets.push(t),
            }
        }
        flush(&mut cell, &mut bullets);
        let _ = writeln!(
            out,
            "<tr><th scope=\"row\">{}</th><td>{cell}</td></tr>",
            escape_html(&row.label)
        );
    }
    out.push_str("</table>\n");
    out
}

fn write_grid(grid: &[Vec<String>], format: Format) -> String {
    match format {
        Format::Text => {
            let columns = grid.first().map_or(0, Vec::len);
            let widths: Vec<usize> = (0..columns)
                .map(|c| {
                    grid.iter()
                        .map(|row| row[c].chars().count())
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let mut out = String::new();
            for row in grid {
                let line = row
                    .iter()
                    .enumerate()
                    .map(|(c, cell)| format!("{cell:<width$}", width = widths[c]))
                    .collect::<Vec<_>>()
                    .join("  ");
                out.push_str(line.trim_end());
                out.push('\n');
            }
            out.push('\n');
            out
        }
        Format::Markdown => {
            let mut out = String::new();
            for (i, row) in grid.iter().enumerate() {
                let cells = row
                    .iter()
                    .map(|c| escape_markdown(c))
                    .collect::<Vec<_>>()
                    .join(" | ");
                let _ = writeln!(out, "| {cells} |");
                if i == 0 {
                    out.push_str(&format!("|{}\n", "---|".repeat(row.len())));
                }
            }
            out.push('\n');
            out
        }
        Format::Latex => {
            let columns = grid.first().map_or(0, Vec::len);
            let layout = format!("ll{}", "r".repeat(columns.saturating_sub(2)));
            let mut out = format!("\\begin{{tabular}}{{{layout}}}\n");
            for (i, row) in grid.iter().enumerate() {
                let cells: Vec<String> = if i == 0 {
                    row.iter()
                        .map(|c| format!("\\textbf{{{}}}", escape_latex(c)))
                        .collect()
                } else {
                    row.iter().map(|c| escape_latex(c)).collect()
                };
                let _ = writeln!(out, "{} \\\\", cells.join(" & "));
                if i == 0 {
                    out.push_str("\\hline\n");
                }
            }
            out.push_str("\\end{tabular}\n\n");
            out
        }
        Format::Html => {
            let mut out = String::from("<table>\n<thead>\n<tr>");
            if let Some(header) = grid.first() {
                for cell in header {
                    let _ = write!(out, "<th>{}</th>", escape_html(cell));
                }
            }
            out.push_str("</tr>\n</thead>\n<tbody>\n");
            for row in grid.iter().skip(1) {
                out.push_str("<tr>");
                for cell in row {
                    let _ = write!(out, "<td>{}</td>", escape_html(cell));
                }
                out.push_str("</tr>\n");
            }
            out.push_str("</tbody>\n</table>\n");
            out
        }
    }
}

/// Wraps the body into a standalone document for HTML; other formats pass
/// through (trimming a single trailing blank line).
fn finish(format: Format, title: &str, body: String) -> String {
    match format {
        Format::Html => {
            let mut out = String::from("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n");
            out.push_str("<meta charset=\"utf-8\">\n");
            let _ = writeln!(out, "<title>{}</title>", escape_html(title));
            out.push_str(
                "<style>\nbody { font-family: Georgia, serif; margin: 2rem; }\n\
                 table { border-collapse: collapse; margin-bottom: 1.5rem; }\n\
                 th, td { border: 1px solid #444; padding: 0.4rem 0.7rem; \
                 text-align: left; vertical-align: top; }\n\
                 th[scope=\"row\"] { white-space: nowrap; }\n\
                 ul { margin: 0; padding-left: 1.2rem; }\n</style>\n",
            );
            out.push_str("</head>\n<body>\n");
            out.push_str(&body);
            out.push_str("</body>\n</html>\n");
            out
        }
        _ => {
            let mut out = body;
            while out.ends_with("\n\n") {
                out.pop();
            }
            out
        }
    }
}

fn escape_markdown(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', "<br>")
}

fn escape_latex(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\textbackslash{}"),
            '&' => out.push_str("\\&"),
            '%' => out.push_str("\\%"),
            '_' => out.push_str("\\_"),
            '#' => out.push_str("\\#"),
            '{' => out.push_str("\\{"),
            '}' => out.push_str("\\}"),
            '$' => out.push_str("\\$"),
            '^' => out.push_str("\\textasciicircum{}"),
            '~' => out.push_str("\\textasciitilde{}"),
            '\n' => out.push_str(" \\newline "),
            _ => out.push(c),
        }
    }
    out
}

fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            '\n' => out.push_str("<br>"),
            _ => out.push(c),
        }
    }
    out
}
