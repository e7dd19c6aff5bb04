//! Minimal standalone SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::model::Compartment;
use crate::num::Real;

use super::artifacts::write_text;
use super::{ConcentrationSeries, DataError};

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 700.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Writes one polyline per labeled series for the chosen compartment.
pub fn emit_plot<T: Real>(
    series: &[(&str, &ConcentrationSeries<T>)],
    compartment: Compartment,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    let svg = render_plot(series, compartment)?;
    write_text(path.as_ref(), &svg)
}

pub fn render_plot<T: Real>(series: &[(&str, &ConcentrationSeries<T>)], compartment: Compartment) -> Result<String, DataError> {
    if series.is_empty() {
        return Err(DataError::EmptyPlot);
    }
    let points = |s: &ConcentrationSeries<T>| -> Vec<(f64, f64)> {
        s.times()
            .iter()
            .zip(s.column(compartment))
            .map(|(t, c)| (t.as_f64(), c.as_f64()))
            .collect()
    };
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, s)| points(s)).collect();
    if all.iter().any(|(t, c)| !t.is_finite() || !c.is_finite()) {
        return Err(DataError::NonFinite {
            column: compartment.column().into(),
            row: 0,
        });
    }
    let (mut t0, mut t1) = bounds(all.iter().map(|p| p.0));
    let (mut c0, mut c1) = bounds(all.iter().map(|p| p.1));
    c0 = c0.min(0.0);
    if t1 <= t0 {
        t0 -= 0.5;
        t1 += 0.5;
    }
    if c1 <= c0 {
        c1 = c0 + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let sy = |c: f64| TOP + plot_h - (c - c0) / (c1 - c0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        compartment.column()
    );

    // Axes and ticks.
    let (xa, ya) = (LEFT, TOP + plot_h);
    let _ = writeln!(
        svg,
        r#"<path d="M{xa},{TOP} L{xa},{ya} L{},{ya}" stroke="black" fill="none"/>"#,
        LEFT + plot_w
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let t = t0 + f * (t1 - t0);
        let c = c0 + f * (c1 - c0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            sx(t),
            ya + 20.0,
            tick_label(t)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            xa - 8.0,
            sy(c) + 4.0,
            tick_label(c)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">Time (h)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {:.2})">Concentration (mg/L)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, (label, s)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = points(s)
            .into_iter()
            .map(|(t, c)| format!("{:.2},{:.2}", sx(t), sy(c)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w - 180.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><rect x="{lx}" y="{ly}" width="14" height="4" fill="{color}"/><text x="{}" y="{}" font-family="sans-serif" font-size="13">{}</text></g>"#,
            lx + 20.0,
            ly + 6.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

fn tick_label(x: f64) -> String {
    if x == 0.0 || (1e-2..1e4).contains(&x.abs()) {
        format!("{}", (x * 1000.0).round() / 1000.0)
    } else {
        format!("{x:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
