//! Tuning reports: per-slice CSV, statistics table and an SVG chart of
//! Dice against lesion share per slice.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::tuner::{ExperimentSummary, SliceResult, Stat};
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "slice_index,lesion_pct,fuzzy_threshold,n_seeds,denoise_sigma,dilate_size,dice,elapsed_ms";

pub fn results_csv(results: &[SliceResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{:.4},{},{},{},{},{:.6},{:.3}",
            r.slice_index,
            r.lesion_pct,
            r.best.fuzzy_threshold,
            r.best.n_seeds,
            r.best.denoise_sigma,
            r.best.dilate_size,
            r.dice,
            r.elapsed_ms
        );
    }
    out
}

/// Mean/std/min/max table in the layout of the usual parameter summary,
/// followed by the wall-clock total.
pub fn summary_table(s: &ExperimentSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Statistical summary of parameters, experiment {} ({} slices)",
        s.experiment.id(),
        s.slices
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<6}{:>17}{:>10}{:>12}",
        "", "Fuzzy Threshold", "Seeds", "Dice Score"
    );
    type Column = fn(&Stat) -> f64;
    let rows: [(&str, Column); 4] = [
        ("mean", |s| s.mean),
        ("std", |s| s.std),
        ("min", |s| s.min),
        ("max", |s| s.max),
    ];
    for (label, get) in rows {
        let _ = writeln!(
            out,
            "{:<6}{:>17.3}{:>10.3}{:>12.3}",
            label,
            get(&s.fuzzy_threshold),
            get(&s.n_seeds),
            get(&s.dice)
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Execution time: {:.3} min", s.total_elapsed_min);
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

/// Two line series sharing an x axis: `left` on a fixed `[0, 1]` scale,
/// `right` on its own scale starting at zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub left: Series,
    pub right: Series,
}

const W: f64 = 720.0;
const H: f64 = 360.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 64.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 52.0;
const LEFT_COLOR: &str = "#1f77b4";
const RIGHT_COLOR: &str = "#d62728";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_max(v: f64) -> f64 {
    if v.is_nan() || v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

impl Chart {
    pub fn dice_and_lesion(title: impl Into<String>, results: &[SliceResult]) -> Self {
        Chart {
            title: title.into(),
            x_label: "Slice".into(),
            left: Series::new(
                "Dice score",
                results
                    .iter()
                    .map(|r| (r.slice_index as f64, r.dice))
                    .collect(),
            ),
            right: Series::new(
                "Lesion %",
                results
                    .iter()
                    .map(|r| (r.slice_index as f64, r.lesion_pct))
                    .collect(),
            ),
        }
    }

    /// Renders a standalone SVG document. Output depends only on the input.
    pub fn to_svg(&self) -> String {
        let xs = self
            .left
            .points
            .iter()
            .chain(&self.right.points)
            .map(|p| p.0);
        let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
            (a.min(x), b.max(x))
        });
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        } else if x1 <= x0 {
            (x0, x1) = (x0 - 0.5, x0 + 0.5);
        }
        let r_max = nice_max(self.right.points.iter().map(|p| p.1).fold(0.0, f64::max));
        let plot_w = W - MARGIN_L - MARGIN_R;
        let plot_h = H - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * plot_w;
        let sy = |v: f64, top: f64| MARGIN_T + plot_h - (v / top).clamp(0.0, 1.0) * plot_h;
        let bottom = MARGIN_T + plot_h;
        let right = MARGIN_L + plot_w;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        // axes
        let _ = writeln!(
            s,
            r#"<g stroke="black" fill="none"><line x1="{MARGIN_L}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{bottom}"/><line x1="{right}" y1="{MARGIN_T}" x2="{right}" y2="{bottom}"/></g>"#
        );
        for i in 0..=5 {
            let f = i as f64 / 5.0;
            let y = bottom - f * plot_h;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="{LEFT_COLOR}">{:.1}</text>"#,
                MARGIN_L - 6.0,
                y + 4.0,
                f
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="start" fill="{RIGHT_COLOR}">{:.2}</text>"#,
                right + 6.0,
                y + 4.0,
                f * r_max
            );
            let x = x0 + f * (x1 - x0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}</text>"#,
                sx(x),
                bottom + 16.0,
                x
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_L + plot_w / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        for (k, (series, color)) in [(&self.left, LEFT_COLOR), (&self.right, RIGHT_COLOR)]
            .into_iter()
            .enumerate()
        {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
                MARGIN_L + 8.0 + 140.0 * k as f64,
                MARGIN_T - 6.0,
                escape(&series.label)
            );
            if series.points.is_empty() {
                continue;
            }
            let top = if k == 0 { 1.0 } else { r_max };
            let pts: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y, top)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

pub fn emit_chart(chart: &Chart, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, chart.to_svg()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuner::{Experiment, ParamPoint};

    fn result(i: usize, dice: f64, pct: f64) -> SliceResult {
        SliceResult {
            slice_index: i,
            best: ParamPoint::default(),
            dice,
            lesion_pct: pct,
            elapsed_ms: 12.5,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = results_csv(&[result(3, 0.91, 4.2), result(4, 0.5, 0.0)]);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "3,4.2000,0.5,4,1,5,0.910000,12.500");
    }

    #[test]
    fn summary_has_four_stat_rows() {
        let results = [result(0, 0.8, 1.0), result(1, 0.9, 2.0)];
        let s = ExperimentSummary::from_results(Experiment::Two, &results, 0.25).unwrap();
        let table = summary_table(&s);
        for label in ["mean", "std", "min", "max"] {
            assert_eq!(
                table.lines().filter(|l| l.starts_with(label)).count(),
                1,
                "{table}"
            );
        }
        assert!(table.contains("Fuzzy Threshold"));
        assert!(table.contains("0.850"));
    }

    #[test]
    fn empty_chart_has_axes_only() {
        let svg = Chart::default().to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<line"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn two_points_one_polyline_each() {
        let chart = Chart::dice_and_lesion("t", &[result(0, 0.8, 1.0), result(1, 0.9, 3.0)]);
        let svg = chart.to_svg();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(LEFT_COLOR) && svg.contains(RIGHT_COLOR));
        assert_eq!(svg, chart.to_svg());
    }

    #[test]
    fn single_point_and_escaping() {
        let chart = Chart {
            title: "a < b & c".into(),
            left: Series::new("d", vec![(5.0, 0.5)]),
            ..Default::default()
        };
        let svg = chart.to_svg();
        assert!(svg.contains("a &lt; b &amp; c"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn nice_axis_max() {
        assert_eq!(nice_max(0.0), 1.0);
        assert_eq!(nice_max(7.3), 10.0);
        assert_eq!(nice_max(23.0), 25.0);
        assert_eq!(nice_max(0.04), 0.05);
    }
}
