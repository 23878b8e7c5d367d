//! Plot data as CSV plus a self-contained SVG line chart.
//!
//! A segment is drawn solid when both endpoints are in range and dashed
//! otherwise. Output depends only on the inputs, so reruns give identical
//! bytes.

use std::fmt::Write;

use crate::metrics::csv_field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub in_range: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<PlotPoint>,
    /// Draw markers only.
    pub scatter: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<PlotPoint>) -> Self {
        Series {
            name: name.into(),
            points,
            scatter: false,
        }
    }

    pub fn scatter(name: impl Into<String>, points: Vec<PlotPoint>) -> Self {
        Series {
            name: name.into(),
            points,
            scatter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    /// x-span drawn as a shaded band.
    pub shade: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("series {series:?} has a non-finite or non-positive value on a log axis")]
    BadValue { series: String },
}

/// Shortest round-trip text for a float, in exponent form when very large
/// or very small.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn plot_csv(series: &[Series]) -> String {
    let mut out = String::from("x,y,series,in_range\n");
    for s in series {
        let name = csv_field(&s.name);
        for p in &s.points {
            let _ = writeln!(out, "{},{},{},{}", num(p.x), num(p.y), name, p.in_range);
        }
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, px_lo: f64, px_hi: f64) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            let pad = if log { 0.5 } else { 0.5 * lo.abs().max(1e-3) };
            lo -= pad;
            hi += pad;
        } else if !log {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis {
            log,
            lo,
            hi,
            px_lo,
            px_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let step = ((b - a) / 8 + 1).max(1);
            let mut t: Vec<(f64, String)> = (a..=b)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect();
            if t.is_empty() {
                let mid = 10f64.powf(0.5 * (self.lo + self.hi));
                t.push((mid, format!("{mid:.3e}")));
            }
            t
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|&s| s >= raw)
                .unwrap_or(10.0 * mag);
            let digits = (-step.log10().floor()).max(0.0) as usize;
            let mut v = (self.lo / step).ceil() * step;
            let mut t = Vec::new();
            while v <= self.hi + 1e-9 * step {
                t.push((v, format!("{:.*}", digits, if v == 0.0 { 0.0 } else { v })));
                v += step;
            }
            t
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn plot_svg(spec: &PlotSpec, series: &[Series]) -> Result<String, PlotError> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::Empty);
    }
    for s in series {
        let bad = s
            .points
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite() || (spec.log_x && p.x <= 0.0) || (spec.log_y && p.y <= 0.0));
        if bad {
            return Err(PlotError::BadValue { series: s.name.clone() });
        }
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xs = all()
        .map(|p| p.x)
        .chain(spec.shade.into_iter().flat_map(|(a, b)| [a, b]));
    let x = Axis::new(xs, spec.log_x, LEFT, WIDTH - RIGHT);
    let y = Axis::new(all().map(|p| p.y), spec.log_y, HEIGHT - BOTTOM, TOP);

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        o,
        r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        o,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        esc(&spec.title)
    );
    if let Some((a, b)) = spec.shade {
        let (xa, xb) = (x.map(a), x.map(b));
        let _ = writeln!(
            o,
            r##"<rect x="{:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="#cccccc" fill-opacity="0.35"/>"##,
            xa,
            (xb - xa).max(1.0),
            HEIGHT - BOTTOM - TOP
        );
    }
    let _ = writeln!(
        o,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333333"/>"##,
        WIDTH - RIGHT - LEFT,
        HEIGHT - BOTTOM - TOP
    );
    for (v, label) in x.ticks() {
        let px = x.map(v);
        let _ = writeln!(
            o,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333333"/>"##,
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 4.0
        );
        let _ = writeln!(
            o,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            HEIGHT - BOTTOM + 16.0
        );
    }
    for (v, label) in y.ticks() {
        let py = y.map(v);
        let _ = writeln!(
            o,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="#333333"/>"##,
            LEFT - 4.0
        );
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        esc(&spec.x_label)
    );
    let _ = writeln!(
        o,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        esc(&spec.y_label)
    );

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let px: Vec<(f64, f64)> = s.points.iter().map(|p| (x.map(p.x), y.map(p.y))).collect();
        if !s.scatter && px.len() > 1 {
            // group consecutive segments of the same style into one polyline
            let solid = |i: usize| s.points[i].in_range && s.points[i + 1].in_range;
            let mut start = 0;
            for i in 0..px.len() - 1 {
                if i + 1 == px.len() - 1 || solid(i) != solid(i + 1) {
                    let pts: Vec<String> = px[start..=i + 1]
                        .iter()
                        .map(|(a, b)| format!("{a:.2},{b:.2}"))
                        .collect();
                    let dash = if solid(i) { "" } else { r#" stroke-dasharray="6 4""# };
                    let _ = writeln!(
                        o,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
                        pts.join(" ")
                    );
                    start = i + 1;
                }
            }
        }
        if s.scatter || px.len() == 1 {
            for (p, &(a, b)) in s.points.iter().zip(&px) {
                let fill = if p.in_range { color } else { "none" };
                let _ = writeln!(
                    o,
                    r#"<circle cx="{a:.2}" cy="{b:.2}" r="3" fill="{fill}" stroke="{color}"/>"#
                );
            }
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            o,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.8"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            esc(&s.name)
        );
    }
    o.push_str("</svg>\n");
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PlotSpec {
        PlotSpec {
            title: "t".into(),
            x_label: "C".into(),
            y_label: "loss".into(),
            log_x: true,
            log_y: false,
            shade: Some((1e15, 1e17)),
        }
    }

    fn pts(xs: &[(f64, bool)]) -> Vec<PlotPoint> {
        xs.iter()
            .map(|&(x, in_range)| PlotPoint {
                x,
                y: 1.0 / x.log10(),
                in_range,
            })
            .collect()
    }

    #[test]
    fn single_point() {
        let s = [Series::line("only", pts(&[(1e16, true)]))];
        assert_eq!(plot_csv(&s), "x,y,series,in_range\n1e16,0.0625,only,true\n");
        let svg = plot_svg(&spec(), &s).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn extrapolation_is_dashed() {
        let s = [Series::line(
            "f",
            pts(&[(1e14, false), (1e15, true), (1e16, true), (1e17, true), (1e18, false)]),
        )];
        let svg = plot_svg(&spec(), &s).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("fill-opacity"));
        assert!(!svg.contains("<script"));
    }

    #[test]
    fn deterministic_and_escaped() {
        let s = [Series::scatter("a<b", pts(&[(1e15, true), (1e16, false)]))];
        let a = plot_svg(&spec(), &s).unwrap();
        assert_eq!(a, plot_svg(&spec(), &s).unwrap());
        assert!(a.contains("a&lt;b"));
        assert_eq!(a.matches("<circle").count(), 2);
    }

    #[test]
    fn rejects_empty_and_bad_values() {
        assert_eq!(plot_svg(&spec(), &[]), Err(PlotError::Empty));
        let s = [Series::line(
            "z",
            vec![PlotPoint {
                x: 0.0,
                y: 1.0,
                in_range: true,
            }],
        )];
        assert!(matches!(plot_svg(&spec(), &s), Err(PlotError::BadValue { .. })));
    }
}
