//! Draws the validity-evolution chart of a family as a standalone SVG 1.1
//! document: four polylines (one per validity type) over the studies on
//! the x axis, with integer score ticks on the y axis and a line-style
//! legend.
//!
//! The output contains no timestamps, generated identifiers, or
//! non-generic font names, so equal inputs produce equal bytes.

use std::fmt::Write as _;

use crate::analysis::EvolutionSeries;
use crate::model::Validity;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChartError {
    #[error("the evolution series has no points to plot")]
    EmptySeries,
    #[error("chart size {width}x{height} is below the 200x200 minimum")]
    SizeTooSmall { width: u32, height: u32 },
}

const MARGIN_LEFT: f64 = 50.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 45.0;

/// Stroke color and dash pattern of one validity line. `None` dashes mean
/// a solid stroke.
fn line_style(validity: Validity) -> (&'static str, Option<&'static str>) {
    match validity {
        Validity::Conclusion => ("#1f77b4", None),
        Validity::Internal => ("#d62728", Some("8 4")),
        Validity::Construct => ("#2ca02c", Some("2 3")),
        Validity::External => ("#9467bd", Some("8 4 2 4")),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.1}")
}

/// Renders the chart for `series` at the given pixel size (minimum
/// 200x200). Fails on an empty series rather than emitting a blank chart.
pub fn evolution_svg(
    series: &EvolutionSeries,
    width: u32,
    height: u32,
) -> Result<String, ChartError> {
    if width < 200 || height < 200 {
        return Err(ChartError::SizeTooSmall { width, height });
    }
    if series.points.is_empty() {
        return Err(ChartError::EmptySeries);
    }

    let w = f64::from(width);
    let h = f64::from(height);
    let margin_right = (w / 4.0).clamp(40.0, 150.0);
    let plot_w = w - MARGIN_LEFT - margin_right;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    let n = series.points.len();

    let x = |i: usize| -> f64 {
        if n == 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + i as f64 * plot_w / (n - 1) as f64
        }
    };

    let scores = || {
        series
            .points
            .iter()
            .flat_map(|p| Validity::ALL.iter().map(|v| p.scores.get(*v)))
    };
    let y_min = scores().min().expect("nonempty series") - 1;
    let y_max = scores().max().expect("nonempty series") + 1;
    let y_range = (y_max - y_min) as f64;
    let y = |v: i64| -> f64 { MARGIN_TOP + (y_max - v) as f64 * plot_h / y_range };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(
        svg,
        "  <title>Validity evolution of {}</title>",
        series.family_acronym
    );
    let _ = writeln!(
        svg,
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>"
    );

    let x_axis_y = MARGIN_TOP + plot_h;
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>",
        fmt(MARGIN_LEFT),
        fmt(x_axis_y),
        fmt(MARGIN_LEFT + plot_w),
        fmt(x_axis_y)
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>",
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP),
        fmt(MARGIN_LEFT),
        fmt(x_axis_y)
    );

    let step = (((y_max - y_min) + 15) / 16).max(1);
    let mut ticks: Vec<i64> = (y_min..=y_max).step_by(step as usize).collect();
    if ticks.last() != Some(&y_max) {
        ticks.push(y_max);
    }
    for tick in ticks {
        let ty = y(tick);
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>",
            fmt(MARGIN_LEFT - 4.0),
            fmt(ty),
            fmt(MARGIN_LEFT),
            fmt(ty)
        );
        let _ = writeln!(
            svg,
            "  <text class=\"y-tick-label\" x=\"{}\" y=\"{}\" \
             text-anchor=\"end\" dominant-baseline=\"middle\">{tick}</text>",
            fmt(MARGIN_LEFT - 8.0),
            fmt(ty)
        );
    }

    for (i, point) in series.points.iter().enumerate() {
        let tx = x(i);
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>",
            fmt(tx),
            fmt(x_axis_y),
            fmt(tx),
            fmt(x_axis_y + 4.0)
        );
        let _ = writeln!(
            svg,
            "  <text class=\"x-tick-label\" x=\"{}\" y=\"{}\" \
             text-anchor=\"middle\">{}</text>",
            fmt(tx),
            fmt(x_axis_y + 18.0),
            point.acronym
        );
    }

    for validity in Validity::ALL {
        let (color, dashes) = line_style(validity);
        let points: Vec<String> = series
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{},{}", fmt(x(i)), fmt(y(p.scores.get(validity)))))
            .collect();
        let dash_attr = dashes
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            svg,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash_attr} \
             points=\"{}\"/>",
            points.join(" ")
        );
    }

    for validity in Validity::ALL {
        let (color, _) = line_style(validity);
        for (i, point) in series.points.iter().enumerate() {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>",
                fmt(x(i)),
                fmt(y(point.scores.get(validity)))
            );
        }
    }

    let legend_x = MARGIN_LEFT + plot_w + 12.0;
    for (row, validity) in Validity::ALL.into_iter().enumerate() {
        let (color, dashes) = line_style(validity);
        let ly = MARGIN_TOP + 10.0 + row as f64 * 18.0;
        let dash_attr = dashes
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" \
             stroke=\"{color}\" stroke-width=\"2\"{dash_attr}/>",
            fmt(legend_x),
            fmt(ly),
            fmt(legend_x + 26.0),
            fmt(ly)
        );
        let _ = writeln!(
            svg,
            "  <text class=\"legend-label\" x=\"{}\" y=\"{}\" \
             dominant-baseline=\"middle\">{validity}</text>",
            fmt(legend_x + 32.0),
            fmt(ly)
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::evolution;
    use crate::parser::parse;

    fn series_of(source: &str) -> EvolutionSeries {
        let (corpus, diags) = parse(source, "c.fam");
        assert!(diags.is_empty(), "fixture must parse cleanly: {diags:?}");
        evolution(&corpus.expect("clean parse").families[0])
    }

    const FAMILY: &str = r#"family Demo {
  original study A {
    site: "UPM"
    date: 2014
    goal { gqm: "G" }
    description: "d"
  }
  replication R1 based on A {
    kind: internal
    site: "UPM"
    date: 2015
    purposes: confirm
    change "c" {
      base: "b"
      replication: "r"
      purpose: "p"
      dimension: protocol(experimental_design)
      impact internal: +2 because "x"
      impact external: -1 because "y"
    }
  }
  replication R2 based on R1 {
    kind: external
    site: "UdS"
    date: 2016
    purposes: generalize
    change "c2" {
      base: "b"
      replication: "r"
      purpose: "p"
      dimension: context("site")
      impact conclusion: +3 because "z"
    }
  }
}"#;

    fn parse_svg(svg: &str) -> roxmltree::Document<'_> {
        roxmltree::Document::parse(svg).expect("chart must be well-formed XML")
    }

    #[test]
    fn chart_is_well_formed_svg_11() {
        let svg = evolution_svg(&series_of(FAMILY), 640, 400).unwrap();
        let doc = parse_svg(&svg);
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "svg");
        assert_eq!(root.attribute("version"), Some("1.1"));
        assert_eq!(
            root.tag_name().namespace(),
            Some("http://www.w3.org/2000/svg")
        );
        assert_eq!(root.attribute("width"), Some("640"));
        assert_eq!(root.attribute("height"), Some("400"));
    }

    #[test]
    fn chart_has_exactly_four_polylines_with_distinct_styles() {
        let svg = evolution_svg(&series_of(FAMILY), 640, 400).unwrap();
        let doc = parse_svg(&svg);
        let polylines: Vec<_> = doc
            .descendants()
            .filter(|n| n.tag_name().name() == "polyline")
            .collect();
        assert_eq!(polylines.len(), 4);

        let strokes: Vec<_> = polylines
            .iter()
            .map(|p| p.attribute("stroke").expect("stroke"))
            .collect();
        let dashes: Vec<_> = polylines
            .iter()
            .map(|p| p.attribute("stroke-dasharray").unwrap_or("solid"))
            .collect();
        for (i, stroke) in strokes.iter().enumerate() {
            for other in &strokes[i + 1..] {
                assert_ne!(stroke, other, "stroke colors must differ");
            }
        }
        for (i, dash) in dashes.iter().enumerate() {
            for other in &dashes[i + 1..] {
                assert_ne!(dash, other, "dash patterns must differ");
            }
        }
    }

    #[test]
    fn every_polyline_has_one_vertex_per_study() {
        let series = series_of(FAMILY);
        let svg = evolution_svg(&series, 640, 400).unwrap();
        let doc = parse_svg(&svg);
        for polyline in doc.descendants().filter(|n| n.tag_name().name() == "polyline") {
            let points = polyline.attribute("points").expect("points");
            assert_eq!(points.split_whitespace().count(), series.points.len());
        }
    }

    #[test]
    fn x_ticks_carry_the_acronyms_in_series_order() {
        let series = series_of(FAMILY);
        let svg = evolution_svg(&series, 640, 400).unwrap();
        let doc = parse_svg(&svg);
        let labels: Vec<&str> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("x-tick-label"))
            .map(|n| n.text().unwrap_or(""))
            .collect();
        assert_eq!(labels, vec!["A", "R1", "R2"]);
    }

    #[test]
    fn y_ticks_pad_the_score_range_by_one() {
        let svg = evolution_svg(&series_of(FAMILY), 640, 400).unwrap();
        let doc = parse_svg(&svg);
        let labels: Vec<i64> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("y-tick-label"))
            .map(|n| n.text().unwrap().parse().unwrap())
            .collect();
        // Scores span [-1, +3], so ticks span [-2, +4].
        assert_eq!(labels, vec![-2, -1, 0, 1, 2, 3, 4]);
    }

    #[test]
    fn legend_names_all_four_validity_types() {
        let svg = evolution_svg(&series_of(FAMILY), 640, 400).unwrap();
        let doc = parse_svg(&svg);
        let labels: Vec<&str> = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("legend-label"))
            .map(|n| n.text().unwrap_or(""))
            .collect();
        assert_eq!(labels, vec!["conclusion", "internal", "construct", "external"]);
    }

    #[test]
    fn markers_mark_every_vertex_of_every_line() {
        let series = series_of(FAMILY);
        let svg = evolution_svg(&series, 640, 400).unwrap();
        let doc = parse_svg(&svg);
        let circles = doc
            .descendants()
            .filter(|n| n.tag_name().name() == "circle")
            .count();
        assert_eq!(circles, 4 * series.points.len());
    }

    #[test]
    fn vertices_are_evenly_spaced_on_the_x_axis() {
        let series = series_of(FAMILY);
        let svg = evolution_svg(&series, 640, 400).unwrap();
        let doc = parse_svg(&svg);
        let polyline = doc
            .descendants()
            .find(|n| n.tag_name().name() == "polyline")
            .unwrap();
        let xs: Vec<f64> = polyline
            .attribute("points")
            .unwrap()
            .split_whitespace()
            .map(|pair| pair.split(',').next().unwrap().parse().unwrap())
            .collect();
        // 640 wide: right margin clamps to 150, so the plot spans
        // [50, 490] and three vertices sit 220 apart.
        assert_eq!(xs, vec![50.0, 270.0, 490.0]);
    }

    #[test]
    fn single_study_family_centers_its_only_vertex() {
        let solo = series_of(
            r#"family Solo {
  original study S {
    site: "X"
    date: 2010
    goal { gqm: "G" }
    description: "d"
  }
}"#,
        );
        let svg = evolution_svg(&solo, 640, 400).unwrap();
        let doc = parse_svg(&svg);
        // Zero scores over the padded range [-1, 1] sit halfway down the
        // 335-pixel plot: 20 + 167.5.
        for polyline in doc.descendants().filter(|n| n.tag_name().name() == "polyline") {
            assert_eq!(polyline.attribute("points"), Some("270.0,187.5"));
        }
    }

    #[test]
    fn empty_series_is_an_error() {
        let empty = EvolutionSeries {
            family_acronym: crate::model::Acronym::new("X").unwrap(),
            points: Vec::new(),
        };
        assert_eq!(evolution_svg(&empty, 640, 400), Err(ChartError::EmptySeries));
    }

    #[test]
    fn undersized_charts_are_rejected() {
        let series = series_of(FAMILY);
        assert_eq!(
            evolution_svg(&series, 199, 400),
            Err(ChartError::SizeTooSmall {
                width: 199,
                height: 400
            })
        );
        assert_eq!(
            evolution_svg(&series, 200, 100),
            Err(ChartError::SizeTooSmall {
                width: 200,
                height: 100
            })
        );
        assert!(evolution_svg(&series, 200, 200).is_ok());
    }

    #[test]
    fn chart_bytes_are_deterministic() {
        let series = series_of(FAMILY);
        assert_eq!(
            evolution_svg(&series, 640, 400).unwrap(),
            evolution_svg(&series, 640, 400).unwrap()
        );
    }
}
