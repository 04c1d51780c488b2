//! Minimal self-contained SVG charts: axes with ticks, lines, markers with error bars, bars.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub enum Series {
    Line {
        label: String,
        color: &'static str,
        points: Vec<(f64, f64)>,
    },
    Markers {
        label: String,
        color: &'static str,
        points: Vec<(f64, f64, f64)>,
    },
    /// Histogram bars as (left edge, width, height).
    Bars {
        label: String,
        color: &'static str,
        bars: Vec<(f64, f64, f64)>,
    },
    VerticalLine {
        label: String,
        color: &'static str,
        x: f64,
    },
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn include(&mut self, v: f64) {
        if v.is_finite() {
            self.lo = self.lo.min(v);
            self.hi = self.hi.max(v);
        }
    }

    fn padded(&self) -> (f64, f64) {
        if !(self.lo <= self.hi) {
            return (0.0, 1.0);
        }
        let span = self.hi - self.lo;
        let pad = if span > 0.0 { 0.05 * span } else { self.lo.abs().max(1.0) * 0.5 };
        (self.lo - pad, self.hi + pad)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let mut xr = Range { lo: f64::INFINITY, hi: f64::NEG_INFINITY };
        let mut yr = Range { lo: f64::INFINITY, hi: f64::NEG_INFINITY };
        for s in &self.series {
            match s {
                Series::Line { points, .. } => points.iter().for_each(|(x, y)| {
                    xr.include(*x);
                    yr.include(*y);
                }),
                Series::Markers { points, .. } => points.iter().for_each(|(x, y, e)| {
                    xr.include(*x);
                    yr.include(y - e);
                    yr.include(y + e);
                }),
                Series::Bars { bars, .. } => bars.iter().for_each(|(x, w, h)| {
                    xr.include(*x);
                    xr.include(x + w);
                    yr.include(0.0);
                    yr.include(*h);
                }),
                Series::VerticalLine { x, .. } => xr.include(*x),
            }
        }
        let (x0, x1) = xr.padded();
        let (y0, y1) = yr.padded();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
                TOP + ph,
                TOP + ph + 5.0
            );
            let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{t:.3e}</text>"#, TOP + ph + 18.0);
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ =
                writeln!(out, r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"##, LEFT - 5.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t:.3e}</text>"#, LEFT - 8.0, y + 4.0);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let mut legend = Vec::new();
        for s in &self.series {
            match s {
                Series::Bars { label, color, bars } => {
                    for (x, w, h) in bars {
                        let (left, right) = (sx(*x), sx(x + w));
                        let (top, base) = (sy(*h), sy(0.0));
                        let _ = writeln!(
                            out,
                            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.45" stroke="{color}" stroke-width="0.5"/>"#,
                            (right - left).max(0.0),
                            (base - top).max(0.0)
                        );
                    }
                    legend.push((label, *color));
                }
                Series::Line { label, color, points } => {
                    let path: Vec<String> =
                        points.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
                        path.join(" ")
                    );
                    legend.push((label, *color));
                }
                Series::Markers { label, color, points } => {
                    for (x, y, e) in points {
                        let (px, py) = (sx(*x), sy(*y));
                        if *e > 0.0 {
                            let _ = writeln!(
                                out,
                                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="{color}"/>"#,
                                sy(y - e),
                                sy(y + e)
                            );
                        }
                        let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#);
                    }
                    legend.push((label, *color));
                }
                Series::VerticalLine { label, color, x } => {
                    let px = sx(*x);
                    let _ = writeln!(
                        out,
                        r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 4" stroke-width="1.5"/>"#,
                        TOP + ph
                    );
                    legend.push((label, *color));
                }
            }
        }
        for (i, (label, color)) in legend.iter().enumerate() {
            let y = TOP + 16.0 + 16.0 * i as f64;
            let x = LEFT + pw - 190.0;
            let _ = writeln!(out, r#"<rect x="{x:.1}" y="{:.1}" width="12" height="4" fill="{color}"/>"#, y - 4.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, escape(label));
        }
        out.push_str("</svg>\n");
        out
    }
}
