//! Static SVG plots. Output depends only on the inputs, so identical runs give
//! identical files.

use std::fmt::Write;

use crate::diagnostics::FitReport;
use crate::poe::SnSeries;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Markers,
    Line,
    MarkersAndLine,
}

#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<PlotSeries>,
    pub annotation: Option<String>,
    pub zero_line: bool,
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

impl Plot {
    /// Renders the plot, or `None` when no series has a finite point.
    pub fn render(&self) -> Option<String> {
        let finite: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        if finite.is_empty() {
            return None;
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &finite {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if self.zero_line {
            y0 = y0.min(0.0);
            y1 = y1.max(0.0);
        }
        let (x0, x1) = padded_range(x0, x1);
        let (y0, y1) = padded_range(y0, y1);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(xv),
                TOP + ph + 18.0,
                fmt_num(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                sy(yv) + 4.0,
                fmt_num(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        if self.zero_line {
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
                sy(0.0),
                LEFT + pw,
                sy(0.0)
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            if matches!(s.style, Style::Line | Style::MarkersAndLine) && pts.len() > 1 {
                let path: Vec<String> = pts
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
            if matches!(s.style, Style::Markers | Style::MarkersAndLine) {
                for &(x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                        sx(x),
                        sy(y)
                    );
                }
            }
            let ly = TOP + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
                LEFT + pw - 150.0,
                LEFT + pw - 130.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                LEFT + pw - 125.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        if let Some(note) = &self.annotation {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                LEFT + 8.0,
                TOP + ph - 8.0,
                escape(note)
            );
        }
        out.push_str("</svg>\n");
        Some(out)
    }
}

/// `ln S_n` against `n` with the fitted line and the largest data-to-fit gap.
pub fn log_series_plot(title: &str, s: &SnSeries, fit: &FitReport) -> Option<String> {
    let data: Vec<(f64, f64)> = s
        .ns()
        .zip(&s.values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(n, &v)| (n as f64, v.ln()))
        .collect();
    let mut series = vec![PlotSeries {
        label: "ln S_n".into(),
        points: data,
        style: Style::Markers,
    }];
    let mut annotation = None;
    if let (Some(a), Some(b)) = (fit.intercept, fit.slope) {
        let [lo, hi] = fit.fit_window;
        series.push(PlotSeries {
            label: "fit".into(),
            points: vec![(lo as f64, a + b * lo as f64), (hi as f64, a + b * hi as f64)],
            style: Style::Line,
        });
        if let Some((n, r)) = fit
            .points
            .iter()
            .zip(&fit.residuals_ppt)
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        {
            annotation = Some(format!(
                "slope {:.6}, max |data - fit| = {:.3e} ppt at n = {n}",
                b,
                r.abs()
            ));
        }
    }
    Plot {
        title: title.to_string(),
        x_label: "n (cycles)".into(),
        y_label: "ln S_n".into(),
        series,
        annotation,
        zero_line: false,
    }
    .render()
}

/// Fit residuals against `n`.
pub fn residual_plot(title: &str, fit: &FitReport) -> Option<String> {
    Plot {
        title: title.to_string(),
        x_label: "n (cycles)".into(),
        y_label: "residual (ppt)".into(),
        series: vec![PlotSeries {
            label: "residual".into(),
            points: residual_points(fit),
            style: Style::MarkersAndLine,
        }],
        annotation: None,
        zero_line: true,
    }
    .render()
}

/// Residual curves of several runs on one set of axes.
pub fn overlay_plot(title: &str, runs: &[(String, FitReport)]) -> Option<String> {
    Plot {
        title: title.to_string(),
        x_label: "n (cycles)".into(),
        y_label: "residual (ppt)".into(),
        series: runs
            .iter()
            .map(|(label, fit)| PlotSeries {
                label: label.clone(),
                points: residual_points(fit),
                style: Style::MarkersAndLine,
            })
            .collect(),
        annotation: None,
        zero_line: true,
    }
    .render()
}

fn residual_points(fit: &FitReport) -> Vec<(f64, f64)> {
    fit.points
        .iter()
        .zip(&fit.residuals_ppt)
        .map(|(&n, &r)| (n as f64, r))
        .collect()
}
