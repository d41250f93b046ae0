//! Minimal SVG writers for scatter plots and horizontal bar charts. Output
//! depends only on the inputs, with coordinates rounded to two decimals.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const CLASS_COLORS: [&str; 2] = ["#1f77b4", "#d62728"];
const BAR_COLOR: &str = "#4c72b0";
const FONT: &str = "font-family=\"sans-serif\"";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick label with at most four significant decimals and no trailing zeros.
fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", if v.abs() < 5e-5 { 0.0 } else { v });
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" {FONT}>{}</text>",
        width / 2.0,
        escape(title)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Scatter plot of 2-D points, coloured by binary class when given.
pub fn scatter2d(
    points: &[(f64, f64)],
    classes: Option<&[u8]>,
    title: &str,
    x_label: &str,
    y_label: &str,
) -> String {
    let (left, right, top, bottom) = (70.0, WIDTH - 30.0, 40.0, HEIGHT - 60.0);
    let (x0, x1) = range(points.iter().map(|p| p.0));
    let (y0, y1) = range(points.iter().map(|p| p.1));
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT, title);
    let _ = writeln!(
        out,
        "<rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        right - left,
        bottom - top
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\" {FONT}>{}</text>",
            sx(xv),
            bottom + 16.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" {FONT}>{}</text>",
            left - 6.0,
            sy(yv) + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" {FONT}>{}</text>",
        (left + right) / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" {FONT} transform=\"rotate(-90 18 {:.2})\">{}</text>",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );
    for (i, &(x, y)) in points.iter().enumerate() {
        let color = match classes {
            Some(c) => CLASS_COLORS[usize::from(c[i].min(1))],
            None => CLASS_COLORS[0],
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.7\"/>",
            sx(x),
            sy(y)
        );
    }
    if classes.is_some() {
        for (k, color) in CLASS_COLORS.iter().enumerate() {
            let y = top + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{color}\"/>",
                right - 70.0
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" {FONT}>outcome {k}</text>",
                right - 60.0,
                y + 4.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

pub struct Bar {
    pub label: String,
    pub value: f64,
    /// Optional whisker from low to high.
    pub spread: Option<(f64, f64)>,
}

/// Horizontal bar chart; `axis` fixes the value range when given.
pub fn bar_chart(bars: &[Bar], title: &str, value_label: &str, axis: Option<(f64, f64)>) -> String {
    let row = 24.0;
    let height = 100.0 + row * bars.len() as f64;
    let (left, right, top) = (170.0, WIDTH - 60.0, 40.0);
    let bottom = top + row * bars.len() as f64;
    let (v0, v1) = axis.unwrap_or_else(|| {
        let hi = bars
            .iter()
            .map(|b| b.spread.map_or(b.value, |s| s.1.max(b.value)))
            .fold(0.0_f64, f64::max);
        (0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 })
    });
    let sx = |v: f64| left + ((v - v0) / (v1 - v0)).clamp(0.0, 1.0) * (right - left);

    let mut out = String::new();
    header(&mut out, WIDTH, height, title);
    for i in 0..=4 {
        let v = v0 + (v1 - v0) * i as f64 / 4.0;
        let x = sx(v);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{top:.2}\" x2=\"{x:.2}\" y2=\"{bottom:.2}\" stroke=\"#dddddd\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\" {FONT}>{}</text>",
            bottom + 16.0,
            tick_label(v)
        );
    }
    for (i, b) in bars.iter().enumerate() {
        let y = top + row * i as f64;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\" {FONT}>{}</text>",
            left - 8.0,
            y + row * 0.65,
            escape(&b.label)
        );
        let _ = writeln!(
            out,
            "<rect x=\"{left:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{BAR_COLOR}\"/>",
            y + 4.0,
            sx(b.value) - left,
            row - 8.0
        );
        if let Some((lo, hi)) = b.spread {
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
                sx(lo),
                y + row / 2.0,
                sx(hi),
                y + row / 2.0
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" {FONT}>{:.3}</text>",
            sx(b.value) + 4.0,
            y + row * 0.65,
            b.value
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" {FONT}>{}</text>",
        (left + right) / 2.0,
        bottom + 40.0,
        escape(value_label)
    );
    out.push_str("</svg>\n");
    out
}
