//! Minimal deterministic SVG line plots.
//!
//! Text output only — fixed layout, fixed precision coordinates — so plots
//! are byte-stable across runs and suitable for golden-file comparison.
//! Two panels: the left shows each series min-max scaled to the panel (the
//! legend carries each series' range), the right shows log10 values on a
//! shared axis.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    /// (year, value) points; values must be positive for the log panel.
    pub points: &'a [(f64, f64)],
}

const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 56.0;
const MARGIN_B: f64 = 44.0;

/// Renders the two-panel figure.
pub fn two_panel_plot(title: &str, series: &[Series<'_>]) -> String {
    let width = 2.0 * PANEL_W;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width:.0}" height="{PANEL_H:.0}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    render_panel(&mut out, 0.0, "linear (per-series scale)", series, false);
    render_panel(&mut out, PANEL_W, "log10 (shared scale)", series, true);
    out.push_str("</svg>\n");
    out
}

fn render_panel(out: &mut String, x0: f64, subtitle: &str, series: &[Series<'_>], log: bool) {
    let left = x0 + MARGIN_L;
    let right = x0 + PANEL_W - MARGIN_R;
    let top = MARGIN_T;
    let bottom = PANEL_H - MARGIN_B;

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="36" text-anchor="middle">{}</text>"#,
        x0 + PANEL_W / 2.0,
        escape(subtitle)
    );
    // Axis frame.
    let _ = writeln!(
        out,
        r#"<polyline points="{left:.1},{top:.1} {left:.1},{bottom:.1} {right:.1},{bottom:.1}" fill="none" stroke="black" stroke-width="1"/>"#
    );

    let (x_min, x_max) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let x_of = |x: f64| -> f64 {
        if x_max == x_min {
            (left + right) / 2.0
        } else {
            left + (x - x_min) / (x_max - x_min) * (right - left)
        }
    };

    // Shared y-extent for the log panel; per-series for the linear one.
    let shared = if log {
        Some(extent(
            series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1.log10())),
        ))
    } else {
        None
    };

    for (i, s) in series.iter().enumerate() {
        let transformed: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|&(x, y)| (x, if log { y.log10() } else { y }))
            .collect();
        let (y_min, y_max) =
            shared.unwrap_or_else(|| extent(transformed.iter().map(|p| p.1)));
        let y_of = |y: f64| -> f64 {
            if y_max == y_min {
                (top + bottom) / 2.0
            } else {
                bottom - (y - y_min) / (y_max - y_min) * (bottom - top)
            }
        };
        let mut path = String::new();
        for &(x, y) in &transformed {
            let _ = write!(path, "{:.2},{:.2} ", x_of(x), y_of(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            path.trim_end(),
            s.color
        );
        // Legend line with the series range (original units).
        let (lo, hi) = extent(s.points.iter().map(|p| p.1));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{}">{} [{:.6e}, {:.6e}]</text>"#,
            left + 6.0,
            top + 16.0 + 16.0 * i as f64,
            s.color,
            escape(s.label),
            lo,
            hi
        );
    }

    // X-axis end labels.
    let _ = writeln!(
        out,
        r#"<text x="{left:.1}" y="{:.1}" text-anchor="middle">{x_min:.0}</text>"#,
        bottom + 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{right:.1}" y="{:.1}" text-anchor="middle">{x_max:.0}</text>"#,
        bottom + 18.0
    );
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
