//! Minimal static SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 70.0;
const TICKS: usize = 5;

/// One polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: u64,
    pub kind: String,
    pub points: Vec<(f64, f64)>,
}

pub fn kind_color(kind: &str) -> &'static str {
    match kind {
        "constrained" => "#1f77b4",
        "relaxed" => "#d62728",
        "identity" => "#ff7f0e",
        _ => "#555555",
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(series: &[Series], markers: &[(f64, f64)]) -> Self {
        let pts = series.iter().flat_map(|s| s.points.iter()).chain(markers.iter());
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = (f64::INFINITY, f64::NEG_INFINITY);
        for &(px, py) in pts {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
        Self { x: pad(x), y: pad(y) }
    }

    fn map(&self, (px, py): (f64, f64)) -> (f64, f64) {
        let sx = MARGIN + (px - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN);
        let sy = HEIGHT - MARGIN - (py - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN);
        (sx, sy)
    }
}

fn pad((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
        let half = 0.5 * (1.0 + lo.abs() * 0.05);
        return (lo - half, hi + half);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn tick_label(v: f64, span: f64) -> String {
    if span >= 50.0 {
        format!("{v:.0}")
    } else if span >= 0.5 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders a chart with axes, one polyline per series and optional destination markers.
pub fn render(title: &str, x_label: &str, y_label: &str, series: &[Series], markers: &[(f64, f64)]) -> String {
    let frame = Frame::fit(series, markers);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));

    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    let (x1, y1) = (WIDTH - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let vx = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let vy = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (sx, _) = frame.map((vx, frame.y.0));
        let (_, sy) = frame.map((frame.x.0, vy));
        let _ = writeln!(
            s,
            r#"<text x="{sx:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            y0 + 18.0,
            tick_label(vx, frame.x.1 - frame.x.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
            x0 - 6.0,
            sy + 4.0,
            tick_label(vy, frame.y.1 - frame.y.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {0})">{1}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    );

    for ser in series {
        let pts = ser
            .points
            .iter()
            .map(|&p| {
                let (sx, sy) = frame.map(p);
                format!("{sx:.2},{sy:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            s,
            r#"<polyline class="trajectory" data-kind="{}" data-id="{}" fill="none" stroke="{}" stroke-width="1.2" points="{pts}"/>"#,
            escape(&ser.kind),
            ser.id,
            kind_color(&ser.kind)
        );
    }
    for &m in markers {
        let (sx, sy) = frame.map(m);
        let _ = writeln!(
            s,
            r#"<circle class="destination" cx="{sx:.2}" cy="{sy:.2}" r="6" fill="none" stroke="black" stroke-width="2"/>"#
        );
    }

    let mut kinds: Vec<&str> = series.iter().map(|s| s.kind.as_str()).collect();
    kinds.dedup();
    kinds.sort_unstable();
    kinds.dedup();
    for (i, kind) in kinds.iter().enumerate() {
        let y = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{:.2}" y="{y:.2}" font-size="12" text-anchor="end" fill="{}">{}</text>"#,
            WIDTH - MARGIN,
            kind_color(kind),
            escape(kind)
        );
    }
    s.push_str("</svg>\n");
    s
}
