//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;

use crate::error::{CliError, CliResult};

const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#d62728", "#000000", "#7f7f7f", "#9467bd"];
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 52.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: Option<String>,
    pub style: Style,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, color: None, style: Style::Line }
    }

    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, color: None, style: Style::Markers }
    }

    pub fn with_color(mut self, color: impl Into<String>) -> Self {
        self.color = Some(color.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl Axes {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            width: 640.0,
            height: 400.0,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvgDocument {
    pub text: String,
    pub warnings: Vec<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Render `series` as a standalone SVG 1.1 document.
///
/// With `axes.log_y`, non-positive values are replaced by the smallest positive
/// value across all series and a warning is recorded.
pub fn emit_svg(series: &[Series], axes: &Axes) -> CliResult<SvgDocument> {
    if series.is_empty() {
        return Err(CliError::Plot("no series to plot".into()));
    }
    let mut warnings = Vec::new();
    for s in series {
        if s.points.is_empty() {
            return Err(CliError::Plot(format!("series '{}' is empty", s.label)));
        }
        if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(CliError::Plot(format!("series '{}' has non-finite values", s.label)));
        }
    }

    let mut data: Vec<Vec<(f64, f64)>> = series.iter().map(|s| s.points.clone()).collect();
    if axes.log_y {
        let floor = data
            .iter()
            .flatten()
            .map(|p| p.1)
            .filter(|&y| y > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !floor.is_finite() {
            return Err(CliError::Plot("log scale needs at least one positive value".into()));
        }
        for (s, pts) in series.iter().zip(&mut data) {
            let clamped = pts.iter().filter(|p| p.1 <= 0.0).count();
            if clamped > 0 {
                warnings.push(format!(
                    "series '{}': {clamped} non-positive value(s) clamped to {floor:e} for log scale",
                    s.label
                ));
            }
            for p in pts.iter_mut() {
                p.1 = p.1.max(floor).log10();
            }
        }
    }

    let all = data.iter().flatten();
    let (x_lo, x_hi) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y_lo, y_hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x_lo, x_hi) = padded(x_lo, x_hi);
    let (y_lo, y_hi) = if axes.log_y {
        padded(y_lo.floor(), y_hi.ceil())
    } else {
        let pad = 0.05 * (y_hi - y_lo);
        padded(y_lo - pad, y_hi + pad)
    };

    let plot_w = axes.width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = axes.height - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    let (w, h) = (axes.width, axes.height);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        w / 2.0,
        escape(&axes.title)
    );

    // Frame and ticks.
    let (left, right, top, bottom) = (MARGIN_LEFT, MARGIN_LEFT + plot_w, MARGIN_TOP, MARGIN_TOP + plot_h);
    let _ = writeln!(out, r#"<g class="axes" stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(out, r#"<path d="M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}"/>"#);
    let x_ticks: Vec<f64> = (0..=5).map(|i| x_lo + (x_hi - x_lo) * i as f64 / 5.0).collect();
    let y_ticks: Vec<f64> = if axes.log_y {
        let (a, b) = (y_lo.round() as i64, y_hi.round() as i64);
        let stride = ((b - a) / 6 + 1).max(1);
        (a..=b).step_by(stride as usize).map(|d| d as f64).collect()
    } else {
        (0..=5).map(|i| y_lo + (y_hi - y_lo) * i as f64 / 5.0).collect()
    };
    for &t in &x_ticks {
        let _ = writeln!(out, r#"<path d="M{0:.2},{bottom:.2} L{0:.2},{1:.2}"/>"#, px(t), bottom + 5.0);
    }
    for &t in &y_ticks {
        let _ = writeln!(out, r#"<path d="M{0:.2},{1:.2} L{left:.2},{1:.2}"/>"#, left - 5.0, py(t));
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="tick-labels" fill="black">"#);
    for &t in &x_ticks {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(t), bottom + 18.0, fmt_tick(t));
    }
    for &t in &y_ticks {
        let label = if axes.log_y { fmt_tick(10f64.powf(t)) } else { fmt_tick(t) };
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, py(t) + 4.0, label);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        h - 12.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
        top + plot_h / 2.0,
        escape(&axes.y_label)
    );

    // Data.
    for (i, (s, pts)) in series.iter().zip(&data).enumerate() {
        let color = s.color.clone().unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string());
        match s.style {
            Style::Line => {
                let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
            }
            Style::Markers => {
                let _ = writeln!(out, r#"<g class="markers" fill="{color}">"#);
                for &(x, y) in pts {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, px(x), py(y));
                }
                let _ = writeln!(out, "</g>");
            }
        }
    }

    // Legend, top right.
    let _ = writeln!(out, r#"<g class="legend">"#);
    for (i, s) in series.iter().enumerate() {
        let color = s.color.clone().unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string());
        let y = top + 14.0 + 18.0 * i as f64;
        let x = right - 150.0;
        let swatch = match s.style {
            Style::Line => format!(r#"<rect x="{x:.2}" y="{:.2}" width="18" height="3" fill="{color}"/>"#, y - 4.0),
            Style::Markers => format!(r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, x + 9.0, y - 3.0),
        };
        let _ = writeln!(
            out,
            r#"<g class="legend-entry">{swatch}<text x="{:.2}" y="{y:.2}">{}</text></g>"#,
            x + 24.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");

    Ok(SvgDocument { text: out, warnings })
}
