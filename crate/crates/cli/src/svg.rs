//! Minimal static SVG charts. Coordinates are printed with fixed precision so
//! identical inputs give identical bytes.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 4] = ["#c0392b", "#2471a3", "#1e8449", "#7d3c98"];

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, r - l, b - t);
    for i in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, f.px(fx), b + 16.0, tick(fx));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, f.py(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str) {
    let mut d = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, f.px(x), f.py(y.clamp(f.y0, f.y1)));
    }
    let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{d}"/>"#);
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * i as f64;
        let x = W - RIGHT - 200.0;
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{c}" stroke-width="2"/>"#, y - 4.0, x + 18.0, y - 4.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 24.0, escape(label));
    }
}

fn bounds(curves: &[Curve]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in curves.iter().flat_map(|c| c.points.iter()) {
        if x.is_finite() && y.is_finite() {
            b = (b.0.min(*x), b.1.max(*x), b.2.min(*y), b.3.max(*y));
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    b
}

/// Line chart of one or more curves on shared axes.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, curves: &[Curve]) -> String {
    let (x0, x1, y0, y1) = bounds(curves);
    let margin = 0.05 * (y1 - y0).max(1e-12);
    let f = Frame::new(x0, x1, y0 - margin, y1 + margin);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (i, c) in curves.iter().enumerate() {
        polyline(&mut out, &f, &c.points, PALETTE[i % PALETTE.len()]);
    }
    if curves.len() > 1 {
        legend(&mut out, &curves.iter().map(|c| c.label.as_str()).collect::<Vec<_>>());
    }
    out.push_str("</svg>\n");
    out
}

/// Histogram bars `(left, right, density)` with density curves drawn over them.
pub fn histogram_chart(title: &str, xlabel: &str, bars: &[(f64, f64, f64)], overlays: &[Curve]) -> String {
    let x0 = bars.first().map(|b| b.0).unwrap_or(0.0);
    let x1 = bars.last().map(|b| b.1).unwrap_or(1.0);
    let peak = bars.iter().map(|b| b.2).fold(0.0, f64::max);
    let curve_peak = overlays
        .iter()
        .flat_map(|c| c.points.iter())
        .filter(|p| p.0 >= x0 && p.0 <= x1)
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let f = Frame::new(x0, x1, 0.0, 1.05 * peak.max(curve_peak).max(1e-12));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, xlabel, "density");
    for &(l, r, d) in bars {
        let (xl, xr, yt) = (f.px(l), f.px(r), f.py(d));
        let _ = writeln!(
            out,
            r##"<rect x="{xl:.2}" y="{yt:.2}" width="{:.2}" height="{:.2}" fill="#d5d8dc" stroke="#909497" stroke-width="0.5"/>"##,
            (xr - xl).max(0.0),
            (f.py(0.0) - yt).max(0.0)
        );
    }
    for (i, c) in overlays.iter().enumerate() {
        let pts: Vec<(f64, f64)> = c.points.iter().copied().filter(|p| p.0 >= x0 && p.0 <= x1).collect();
        polyline(&mut out, &f, &pts, PALETTE[i % PALETTE.len()]);
    }
    if !overlays.is_empty() {
        legend(&mut out, &overlays.iter().map(|c| c.label.as_str()).collect::<Vec<_>>());
    }
    out.push_str("</svg>\n");
    out
}

/// Keep the minimum and maximum of each of `buckets` consecutive groups so
/// that bursts survive decimation.
pub fn decimate(values: &[(u64, f64)], buckets: usize) -> Vec<(f64, f64)> {
    if values.len() <= 2 * buckets {
        return values.iter().map(|&(t, s)| (t as f64, s)).collect();
    }
    let per = values.len().div_ceil(buckets);
    let mut out = Vec::with_capacity(2 * buckets);
    for chunk in values.chunks(per) {
        let lo = chunk.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let hi = chunk.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let (a, b) = if lo.0 <= hi.0 { (lo, hi) } else { (hi, lo) };
        out.push((a.0 as f64, a.1));
        if b.0 != a.0 {
            out.push((b.0 as f64, b.1));
        }
    }
    out
}

/// `n + 1` equally spaced samples of `f` on `[a, b]`.
pub fn sample_curve(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).map(|x| (x, f(x))).collect()
}
