//! Minimal SVG line plot of the R, M and W curves.

use std::fmt::Write;

use lqreturn::spectra::SpectrumRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 48.0;

struct Frame {
    q: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn x(&self, q: f64) -> f64 {
        MARGIN + (q - self.q.0) / (self.q.1 - self.q.0).max(f64::MIN_POSITIVE) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0).max(f64::MIN_POSITIVE) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn path(frame: &Frame, rows: &[SpectrumRow], value: impl Fn(&SpectrumRow) -> f64) -> String {
    let mut d = String::new();
    let mut pen_down = false;
    for r in rows {
        let v = value(r);
        if !v.is_finite() {
            pen_down = false;
            continue;
        }
        let cmd = if pen_down { 'L' } else { 'M' };
        let _ = write!(d, "{cmd}{:.2},{:.2} ", frame.x(r.q), frame.y(v));
        pen_down = true;
    }
    d.trim_end().to_string()
}

pub fn spectrum_plot(rows: &[SpectrumRow], q_star: f64) -> String {
    let finite = rows
        .iter()
        .flat_map(|r| [r.r, r.m, r.w])
        .filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (-1.0, 1.0) };
    let pad = 0.05 * (hi - lo).max(1e-9);
    let frame = Frame {
        q: (rows.first().map_or(0.0, |r| r.q), rows.last().map_or(1.0, |r| r.q)),
        y: (lo - pad, hi + pad),
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y0} L{x1},{y0} M{x0},{y0} L{x0},{y1}" stroke="black" fill="none"/>"#
    );
    for (name, colour, dash, value) in [
        ("M", "#1f77b4", "", (|r: &SpectrumRow| r.m) as fn(&SpectrumRow) -> f64),
        ("W", "#2ca02c", r#" stroke-dasharray="2,3""#, |r: &SpectrumRow| r.w),
        ("R", "#d62728", r#" stroke-dasharray="6,3""#, |r: &SpectrumRow| r.r),
    ] {
        let _ = writeln!(
            svg,
            r#"<path id="{name}" d="{}" stroke="{colour}" stroke-width="1.5" fill="none"{dash}/>"#,
            path(&frame, rows, value)
        );
    }
    if q_star >= frame.q.0 && q_star <= frame.q.1 {
        let x = frame.x(q_star);
        let _ = writeln!(
            svg,
            r#"<path id="q_star" d="M{x:.2},{y0} L{x:.2},{y1}" stroke="gray" stroke-dasharray="1,2" fill="none"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12">q* = {q_star:.6}</text>"#,
            x + 4.0,
            y1 + 12.0
        );
    }
    for (i, (name, colour)) in [("M", "#1f77b4"), ("W", "#2ca02c"), ("R", "#d62728")].iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{colour}">{name}</text>"#,
            x1 - 30.0,
            y1 + 14.0 * (i as f64 + 1.0)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12">q in [{}, {}]</text>"#,
        x0,
        HEIGHT - 16.0,
        frame.q.0,
        frame.q.1
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<SpectrumRow> {
        (0..5)
            .map(|i| {
                let q = i as f64 - 2.0;
                SpectrumRow {
                    q,
                    m: q,
                    h: 0.0,
                    r: q.max(-1.0),
                    w: if i == 0 { f64::NEG_INFINITY } else { q },
                    branch: String::new(),
                }
            })
            .collect()
    }

    #[test]
    fn has_three_curves_and_marker() {
        let svg = spectrum_plot(&rows(), -0.5);
        assert!(svg.starts_with("<svg"));
        for id in ["id=\"M\"", "id=\"R\"", "id=\"W\"", "id=\"q_star\""] {
            assert!(svg.contains(id), "{id}");
        }
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn marker_outside_range_is_omitted() {
        assert!(!spectrum_plot(&rows(), 5.0).contains("q_star"));
    }
}
