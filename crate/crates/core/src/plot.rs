//! Dependency-free SVG scatter plots of 2-D embeddings.

use std::fmt::Write as _;

/// Fill colors assigned to classes in order; wraps after ten classes.
pub const PALETTE: [&str; 10] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEGEND_WIDTH: f64 = 160.0;
const RADIUS: f64 = 3.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render points colored by label, with a legend listing `class_names`.
///
/// The data area is fit to the bounding box of the points plus a 5% margin on
/// each side. Panics if `points` and `labels` differ in length.
pub fn render_scatter(points: &[[f64; 2]], labels: &[usize], class_names: &[String], title: &str) -> String {
    assert_eq!(points.len(), labels.len(), "one label per point");
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if points.is_empty() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span_x = if x1 > x0 { x1 - x0 } else { 1.0 };
    let span_y = if y1 > y0 { y1 - y0 } else { 1.0 };
    let (mx, my) = (0.05 * span_x, 0.05 * span_y);
    let (vx0, vx1, vy0, vy1) = (x0 - mx, x0 + span_x + mx, y0 - my, y0 + span_y + my);
    let sx = |x: f64| (x - vx0) / (vx1 - vx0) * WIDTH;
    let sy = |y: f64| HEIGHT - (y - vy0) / (vy1 - vy0) * HEIGHT;

    let mut svg = String::new();
    let total_w = WIDTH + LEGEND_WIDTH;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{HEIGHT}" viewBox="0 0 {total_w} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff" stroke="#cccccc"/>"##);
    let _ = writeln!(svg, r#"<g class="points">"#);
    for (p, &l) in points.iter().zip(labels) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{RADIUS}" fill="{}" fill-opacity="0.8"/>"#,
            sx(p[0]),
            sy(p[1]),
            PALETTE[l % PALETTE.len()]
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (i, name) in class_names.iter().enumerate() {
        let y = 20.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            WIDTH + 12.0,
            y - 9.0,
            PALETTE[i % PALETTE.len()],
            WIDTH + 28.0,
            y,
            escape(name)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("class {i}")).collect()
    }

    #[test]
    fn one_circle_per_point() {
        let pts: Vec<[f64; 2]> = (0..25).map(|i| [i as f64, (i * i) as f64]).collect();
        let labels: Vec<usize> = (0..25).map(|i| i % 3).collect();
        let svg = render_scatter(&pts, &labels, &names(3), "t");
        assert_eq!(svg.matches("<circle").count(), 25);
        for c in &PALETTE[..3] {
            assert!(svg.contains(&format!(r#"fill="{c}""#)));
        }
        assert_eq!(svg.matches("<text").count(), 3);
    }

    #[test]
    fn empty_plot_has_legend_only() {
        let svg = render_scatter(&[], &[], &names(2), "empty");
        assert_eq!(svg.matches("<circle").count(), 0);
        assert_eq!(svg.matches("<text").count(), 2);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn escapes_names() {
        let svg = render_scatter(&[[0.0, 0.0]], &[0], &["a<b&c".to_string()], "x");
        assert!(svg.contains("a&lt;b&amp;c"));
    }
}
