use std::fmt::Write;

use crate::output::Series;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot of the series mean over a shaded min/max band, with axes,
/// tick labels and a title.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, s: &Series) -> String {
    let (x0, x1) = range(s.x.iter().copied());
    let (y0, y1) = range(s.min.iter().chain(&s.max).chain(&s.mean).copied());
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let pts = |ys: &[f64]| -> Vec<String> {
        s.x.iter().zip(ys).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect()
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let mut band = pts(&s.max);
    band.extend(pts(&s.min).into_iter().rev());
    if !band.is_empty() {
        let _ = writeln!(out, r#"<polygon points="{}" fill="steelblue" fill-opacity="0.25" stroke="none"/>"#, band.join(" "));
    }
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, pts(&s.mean).join(" "));
    for p in pts(&s.mean) {
        let (cx, cy) = p.split_once(',').unwrap();
        let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="steelblue"/>"#);
    }

    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(out, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(out, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#);
    for x in &s.x {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.2}" y1="{bottom}" x2="{0:.2}" y2="{1}" stroke="black"/><text x="{0:.2}" y="{2}" text-anchor="middle">{3}</text>"#,
            px(*x),
            bottom + 5.0,
            bottom + 20.0,
            x
        );
    }
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1:.2}" x2="{left}" y2="{1:.2}" stroke="black"/><text x="{2}" y="{3:.2}" text-anchor="end">{4:.4}</text>"#,
            left - 5.0,
            py(y),
            left - 8.0,
            py(y) + 4.0,
            y
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, MARGIN / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{0}" text-anchor="middle" transform="rotate(-90 15 {0})">{1}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    );
    out.push_str("</svg>\n");
    out
}
