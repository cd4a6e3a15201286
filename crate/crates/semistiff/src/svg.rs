//! Minimal standalone SVG line plots. Each series is also embedded as an
//! XML comment so the numbers survive without a plotting tool.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace("--", "- -")
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let mut b = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in panel.series.iter().flat_map(|s| &s.points) {
        if x.is_finite() && y.is_finite() {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 <= b.0 {
        b.1 = b.0 + 1.0;
    }
    if b.3 <= b.2 {
        b.3 = b.2 + 1.0;
    }
    let pad = 0.05 * (b.3 - b.2);
    (b.0, b.1, b.2 - pad, b.3 + pad)
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let (x0, x1, y0, y1) = bounds(panel);
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * w;
    let sy = |y: f64| top + MARGIN + (y1 - y) / (y1 - y0) * h;
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{:.2}" width="{w}" height="{h}" fill="none" stroke="black"/>"#,
        top + MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        top + MARGIN * 0.6,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        top + HEIGHT - 12.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-size="12" transform="rotate(-90 14 {:.2})" text-anchor="middle">{}</text>"#,
        top + HEIGHT / 2.0,
        top + HEIGHT / 2.0,
        escape(&panel.y_label)
    );
    for t in 0..=4 {
        let fx = x0 + (x1 - x0) * f64::from(t) / 4.0;
        let fy = y0 + (y1 - y0) * f64::from(t) / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{fx:.3}</text>"#,
            sx(fx),
            top + HEIGHT - MARGIN + 14.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{fy:.3}</text>"#,
            MARGIN - 4.0,
            sy(fy) + 3.0
        );
    }
    for (n, s) in panel.series.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let _ = write!(out, "<!-- data {}:", escape(&s.label));
        for (x, y) in &s.points {
            let _ = write!(out, " {x:e},{y:e}");
        }
        let _ = writeln!(out, " -->");
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            top + MARGIN + 14.0 + 13.0 * n as f64,
            escape(&s.label)
        );
    }
}

/// Panels stacked vertically in one document.
pub fn render(panels: &[Panel]) -> String {
    let total = HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total}" viewBox="0 0 {WIDTH} {total}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (n, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, HEIGHT * n as f64);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeds_data_and_escapes_labels() {
        let svg = render(&[Panel {
            title: "a < b".into(),
            x_label: "R".into(),
            y_label: "Q".into(),
            series: vec![Series {
                label: "p=2".into(),
                points: vec![(0.0, 1.0), (1.0, -2.0)],
                dashed: false,
            }],
        }]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("<!-- data p=2: 0e0,1e0 1e0,-2e0 -->"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn degenerate_ranges_do_not_divide_by_zero() {
        let svg = render(&[Panel {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            series: vec![Series {
                label: "flat".into(),
                points: vec![(0.5, 1.0), (0.5, 1.0)],
                dashed: true,
            }],
        }]);
        assert!(!svg.contains("NaN"));
    }
}
