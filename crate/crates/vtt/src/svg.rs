//! A small SVG writer for line plots with shaded bands and scatter points.

use std::fmt::Write;

#[derive(Debug, Clone)]
pub struct Band {
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub fill: &'static str,
}

#[derive(Debug, Clone)]
pub struct Line {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub stroke: &'static str,
    pub dashed: bool,
    pub label: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Points {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub fill: &'static str,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
    pub bands: Vec<Band>,
    pub lines: Vec<Line>,
    pub points: Vec<Points>,
    /// Vertical guides, e.g. the split at a = 0.5.
    pub x_guides: Vec<f64>,
}

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
pub const BAND_FILLS: [&str; 6] = ["#aec7e8", "#ff9896", "#98df8a", "#c5b0d5", "#ffbb78", "#c49c94"];

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 45.0;

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            width: 640.0,
            height: 400.0,
            bands: Vec::new(),
            lines: Vec::new(),
            points: Vec::new(),
            x_guides: Vec::new(),
        }
    }

    fn extent(&self) -> ((f64, f64), (f64, f64)) {
        let xs = self
            .bands
            .iter()
            .flat_map(|b| b.x.iter())
            .chain(self.lines.iter().flat_map(|l| l.x.iter()))
            .chain(self.points.iter().flat_map(|p| p.x.iter()));
        let ys = self
            .bands
            .iter()
            .flat_map(|b| b.lower.iter().chain(&b.upper))
            .chain(self.lines.iter().flat_map(|l| l.y.iter()))
            .chain(self.points.iter().flat_map(|p| p.y.iter()));
        (range(xs), range(ys))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.extent();
        let pw = self.width - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = self.height - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            self.width / 2.0,
            escape(&self.title)
        );

        for band in &self.bands {
            let mut pts: Vec<String> = band
                .x
                .iter()
                .zip(&band.upper)
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            pts.extend(
                band.x
                    .iter()
                    .zip(&band.lower)
                    .rev()
                    .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))),
            );
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{}" fill-opacity="0.5" stroke="none"/>"#,
                pts.join(" "),
                band.fill
            );
        }

        // Axes, ticks and guides.
        let (bx, by) = (sx(x0), sy(y0));
        let _ = writeln!(
            s,
            r#"<path d="M{bx:.2},{:.2} L{bx:.2},{by:.2} L{:.2},{by:.2}" stroke="black" fill="none"/>"#,
            sy(y1),
            sx(x1)
        );
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                sx(xv),
                by + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                bx - 6.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        for &g in &self.x_guides {
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{by:.2}" stroke="#888" stroke-dasharray="2,3"/>"##,
                sy(y1),
                x = sx(g)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            self.height - 8.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{y:.1}" text-anchor="middle" transform="rotate(-90 14 {y:.1})">{}</text>"#,
            escape(&self.y_label),
            y = MARGIN_TOP + ph / 2.0
        );

        for line in &self.lines {
            let pts: Vec<String> = line
                .x
                .iter()
                .zip(&line.y)
                .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
                .collect();
            let dash = if line.dashed { r#" stroke-dasharray="5,4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                pts.join(" "),
                line.stroke
            );
        }
        for group in &self.points {
            for (x, y) in group.x.iter().zip(&group.y) {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                    sx(*x),
                    sy(*y),
                    group.fill
                );
            }
        }

        let mut ly = MARGIN_TOP + 12.0;
        for line in self.lines.iter().filter(|l| l.label.is_some()) {
            let lx = self.width - MARGIN_RIGHT - 150.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 18.0,
                line.stroke,
                lx + 24.0,
                ly + 4.0,
                escape(line.label.as_deref().unwrap_or_default())
            );
            ly += 16.0;
        }
        s.push_str("</svg>\n");
        s
    }
}

fn range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
