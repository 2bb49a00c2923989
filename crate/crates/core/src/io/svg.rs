//! Standalone SVG line plot of correlation curves.
//!
//! Fixed 800×500 viewBox, y axis `[-1.05, 1.05]`, horizontal reference
//! lines at −1, 0 and +1, one polyline per series. The frame is a `<rect>`
//! so the only `<line>` elements are the three references.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::montecarlo::CorrelationCurve;

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 500.0;
pub const Y_MIN: f64 = -1.05;
pub const Y_MAX: f64 = 1.05;

const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct PlotSeries<'a> {
    pub label: &'a str,
    pub curve: &'a CorrelationCurve,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    x_min: f64,
    x_max: f64,
}

impl Frame {
    fn px(&self, beta: f64) -> f64 {
        LEFT + (beta - self.x_min) / (self.x_max - self.x_min) * (SVG_WIDTH - LEFT - RIGHT)
    }

    fn py(&self, corr: f64) -> f64 {
        TOP + (Y_MAX - corr) / (Y_MAX - Y_MIN) * (SVG_HEIGHT - TOP - BOTTOM)
    }
}

/// Renders the series into one SVG document. Output is a pure function of
/// the input, so identical curves give identical bytes.
pub fn render_svg(series: &[PlotSeries<'_>]) -> String {
    let (mut x_min, mut x_max) = series
        .iter()
        .flat_map(|s| s.curve.betas())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
            (lo.min(b), hi.max(b))
        });
    if !x_min.is_finite() {
        (x_min, x_max) = (0.0, std::f64::consts::PI);
    }
    if x_max <= x_min {
        x_min -= 0.5;
        x_max += 0.5;
    }
    let frame = Frame { x_min, x_max };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" width="{SVG_WIDTH}" height="{SVG_HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        SVG_WIDTH - LEFT - RIGHT,
        SVG_HEIGHT - TOP - BOTTOM
    );

    for level in [-1.0, 0.0, 1.0] {
        let y = frame.py(level);
        let _ = writeln!(
            s,
            r#"<line class="reference" x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="gray" stroke-width="1"/>"#,
            SVG_WIDTH - RIGHT
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{level:+.0}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }

    for i in 0..=4 {
        let beta = x_min + (x_max - x_min) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{beta:.3}</text>"#,
            frame.px(beta),
            SVG_HEIGHT - BOTTOM + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">beta (rad)</text>"#,
        LEFT + (SVG_WIDTH - LEFT - RIGHT) / 2.0,
        SVG_HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">correlation</text>"#,
        TOP + (SVG_HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (SVG_HEIGHT - TOP - BOTTOM) / 2.0
    );

    for (k, series) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = series
            .curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", frame.px(p.beta), frame.py(p.corr)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            escape(series.label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{}</text>"#,
            LEFT + 10.0,
            TOP + 16.0 * (k + 1) as f64,
            escape(series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg_file(path: &Path, series: &[PlotSeries<'_>]) -> Result<()> {
    let mut file = super::create_file(path)?;
    file.write_all(render_svg(series).as_bytes())
        .map_err(|e| Error::io(path, e))?;
    super::finish(path, file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lhv_correlation, qm_correlation, Angle};
    use crate::montecarlo::SweepGrid;

    fn curves() -> (CorrelationCurve, CorrelationCurve) {
        let grid = SweepGrid {
            n_points: 50,
            ..SweepGrid::default()
        };
        (
            CorrelationCurve::analytic(Angle::ZERO, &grid, lhv_correlation).unwrap(),
            CorrelationCurve::analytic(Angle::ZERO, &grid, qm_correlation).unwrap(),
        )
    }

    #[test]
    fn structure() {
        let (lhv, qm) = curves();
        let svg = render_svg(&[
            PlotSeries {
                label: "lhv <model>",
                curve: &lhv,
            },
            PlotSeries {
                label: "qm",
                curve: &qm,
            },
        ]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<line").count(), 3);
        assert!(svg.contains(r#"viewBox="0 0 800 500""#));
        assert!(svg.contains("lhv &lt;model&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn reference_lines_at_unit_levels() {
        let frame = Frame {
            x_min: 0.0,
            x_max: 1.0,
        };
        // y = ±1.05 map to the plot edges, y = 0 to the middle.
        assert!((frame.py(Y_MAX) - TOP).abs() < 1e-12);
        assert!((frame.py(Y_MIN) - (SVG_HEIGHT - BOTTOM)).abs() < 1e-12);
        assert!((frame.py(0.0) - (TOP + SVG_HEIGHT - BOTTOM) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let (lhv, _) = curves();
        let series = [PlotSeries {
            label: "lhv",
            curve: &lhv,
        }];
        assert_eq!(render_svg(&series), render_svg(&series));
    }

    #[test]
    fn single_point_curve_renders() {
        let c = CorrelationCurve::analytic(
            Angle::ZERO,
            &SweepGrid {
                n_points: 1,
                ..SweepGrid::default()
            },
            lhv_correlation,
        )
        .unwrap();
        let svg = render_svg(&[PlotSeries {
            label: "one",
            curve: &c,
        }]);
        assert!(!svg.contains("NaN"));
    }
}
