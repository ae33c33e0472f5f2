//! Minimal SVG line charts.
//!
//! Output is deterministic: every coordinate is printed with six decimals so
//! charts can be compared structurally in tests.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines (e.g. a threshold).
    pub hlines: Vec<f64>,
    /// Vertical reference lines (e.g. a train/validation boundary).
    pub vlines: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LineChart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    /// Smallest positive value plotted on a log axis; non-positive values are
    /// clamped to it.
    fn log_floor(&self) -> f64 {
        let max = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.hlines.iter().copied())
            .fold(0.0f64, f64::max);
        let min_pos = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.hlines.iter().copied())
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !min_pos.is_finite() {
            return 1e-300;
        }
        min_pos.max(max * 1e-20)
    }

    fn y_value(&self, y: f64, floor: f64) -> f64 {
        if self.log_y {
            y.max(floor).log10()
        } else {
            y
        }
    }

    fn ranges(&self, floor: f64) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                xr = (xr.0.min(x), xr.1.max(x));
                let y = self.y_value(y, floor);
                yr = (yr.0.min(y), yr.1.max(y));
            }
        }
        for &v in &self.vlines {
            xr = (xr.0.min(v), xr.1.max(v));
        }
        for &h in &self.hlines {
            let y = self.y_value(h, floor);
            yr = (yr.0.min(y), yr.1.max(y));
        }
        let fix = |r: (f64, f64)| {
            if !r.0.is_finite() || !r.1.is_finite() {
                (0.0, 1.0)
            } else if r.0 == r.1 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        (fix(xr), fix(yr))
    }

    pub fn to_svg(&self) -> String {
        let floor = self.log_floor();
        let ((x0, x1), (y0, y1)) = self.ranges(floor);
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_TOP + (1.0 - (self.y_value(y, floor) - y0) / (y1 - y0)) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.6}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT:.6}" y="{MARGIN_TOP:.6}" width="{pw:.6}" height="{ph:.6}" fill="none" stroke="black"/>"#
        );
        // axis tick labels at the range ends
        let y_tick = |v: f64| if self.log_y { format!("1e{v:.1}") } else { format!("{v:.4e}") };
        let _ = writeln!(
            out,
            r#"<text x="{:.6}" y="{:.6}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN_LEFT - 4.0,
            MARGIN_TOP + 4.0,
            y_tick(y1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.6}" y="{:.6}" text-anchor="end" font-size="11">{}</text>"#,
            MARGIN_LEFT - 4.0,
            MARGIN_TOP + ph,
            y_tick(y0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.6}" y="{:.6}" text-anchor="start" font-size="11">{x0:.4}</text>"#,
            MARGIN_LEFT,
            MARGIN_TOP + ph + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.6}" y="{:.6}" text-anchor="end" font-size="11">{x1:.4}</text>"#,
            MARGIN_LEFT + pw,
            MARGIN_TOP + ph + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.6}" y="{:.6}" text-anchor="middle" font-size="13">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.6}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {:.6})">{}</text>"#,
            MARGIN_TOP + ph / 2.0,
            MARGIN_TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for &h in &self.hlines {
            let y = sy(h);
            let _ = writeln!(
                out,
                r#"<line class="hline" x1="{:.6}" y1="{y:.6}" x2="{:.6}" y2="{y:.6}" stroke="red" stroke-dasharray="6 4"/>"#,
                MARGIN_LEFT,
                MARGIN_LEFT + pw
            );
        }
        for &v in &self.vlines {
            let x = sx(v);
            let _ = writeln!(
                out,
                r#"<line class="vline" x1="{x:.6}" y1="{:.6}" x2="{x:.6}" y2="{:.6}" stroke="gray" stroke-dasharray="4 4"/>"#,
                MARGIN_TOP,
                MARGIN_TOP + ph
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<String> =
                s.points.iter().map(|&(x, y)| format!("{:.6},{:.6}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
                pts.join(" "),
                escape(&s.label)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.6}" y="{:.6}" font-size="11" fill="{color}">{}</text>"#,
                MARGIN_LEFT + pw - 150.0,
                MARGIN_TOP + 16.0 + 14.0 * k as f64,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Points of every `<polyline>` in an SVG document, in order. Used to compare
/// charts structurally.
pub fn polyline_points(svg: &str) -> Vec<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut rest = svg;
    while let Some(i) = rest.find("<polyline") {
        rest = &rest[i..];
        let Some(p) = rest.find("points=\"") else { break };
        let body = &rest[p + 8..];
        let end = body.find('"').unwrap_or(body.len());
        let pts = body[..end]
            .split_whitespace()
            .filter_map(|pair| {
                let (x, y) = pair.split_once(',')?;
                Some((x.parse().ok()?, y.parse().ok()?))
            })
            .collect();
        out.push(pts);
        rest = &body[end..];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_series_and_lines() {
        let mut c = LineChart::new("t", "x", "y");
        c.series.push(Series { label: "a<b".into(), points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, 0.5)] });
        c.hlines.push(1.5);
        c.vlines.push(1.0);
        let svg = c.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("class=\"hline\""));
        assert!(svg.contains("class=\"vline\""));
        let pts = polyline_points(&svg);
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].len(), 3);
        // first point sits on the left edge, the maximum on the top edge
        assert_eq!(pts[0][0].0, MARGIN_LEFT);
        assert_eq!(pts[0][1].1, MARGIN_TOP);
    }

    #[test]
    fn log_axis_clamps_zeros() {
        let mut c = LineChart::new("psd", "f", "p");
        c.log_y = true;
        c.series.push(Series { label: "p".into(), points: vec![(0.0, 10.0), (1.0, 0.0), (2.0, 1e-3)] });
        let pts = &polyline_points(&c.to_svg())[0];
        assert!(pts.iter().all(|p| p.1.is_finite()));
        // zero is clamped to the smallest positive value
        assert_eq!(pts[1].1, pts[2].1);
    }

    #[test]
    fn deterministic() {
        let mut c = LineChart::new("t", "x", "y");
        c.series.push(Series { label: "s".into(), points: vec![(0.1, 0.2), (0.3, 0.7)] });
        assert_eq!(c.to_svg(), c.clone().to_svg());
    }
}
