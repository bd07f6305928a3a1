//! Minimal SVG plot writer. Output depends only on the data, so identical
//! inputs give identical bytes.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 90.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 46.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

// viridis-like colour stops
const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn colour(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 1.0 };
    let i = STOPS.iter().rposition(|s| s.0 <= t).unwrap_or(0).min(STOPS.len() - 2);
    let (t0, c0) = STOPS[i];
    let (t1, c1) = STOPS[i + 1];
    let u = (t - t0) / (t1 - t0);
    let ch = |k: usize| (c0[k] + u * (c1[k] - c0[k])).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

/// Tick positions with a 1-2-5 step, about five per axis.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        None
    } else if lo == hi {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

struct Panel {
    top: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn left(&self) -> f64 {
        MARGIN_LEFT
    }
    fn right(&self) -> f64 {
        WIDTH - MARGIN_RIGHT
    }
    fn bottom(&self) -> f64 {
        self.top + PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }
    fn sx(&self, x: f64) -> f64 {
        self.left() + (x - self.x.0) / (self.x.1 - self.x.0) * (self.right() - self.left())
    }
    fn sy(&self, y: f64) -> f64 {
        self.bottom() - (y - self.y.0) / (self.y.1 - self.y.0) * (self.bottom() - self.top)
    }
}

pub struct Svg {
    height: f64,
    body: String,
}

impl Svg {
    fn new(panels: usize) -> Self {
        Self {
            height: PANEL_HEIGHT * panels as f64,
            body: String::new(),
        }
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = px(WIDTH),
            h = px(self.height),
            body = self.body
        )
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\">{}</text>",
            px(x),
            px(y),
            escape(s)
        );
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, extra: &str) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\"{extra}/>",
            px(a.0),
            px(a.1),
            px(b.0),
            px(b.1)
        );
    }

    fn axes(&mut self, p: &Panel, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            px(p.left()),
            px(p.top),
            px(p.right() - p.left()),
            px(p.bottom() - p.top)
        );
        for t in ticks(p.x.0, p.x.1) {
            let x = p.sx(t);
            self.line((x, p.bottom()), (x, p.bottom() + 5.0), "black", "");
            self.text(x, p.bottom() + 18.0, "middle", &tick_label(t));
        }
        for t in ticks(p.y.0, p.y.1) {
            let y = p.sy(t);
            self.line((p.left() - 5.0, y), (p.left(), y), "black", "");
            self.text(p.left() - 8.0, y + 4.0, "end", &tick_label(t));
        }
        self.text(0.5 * (p.left() + p.right()), p.top - 12.0, "middle", title);
        self.text(0.5 * (p.left() + p.right()), p.bottom() + 36.0, "middle", xlabel);
        let (cx, cy) = (16.0, 0.5 * (p.top + p.bottom()));
        let _ = writeln!(
            self.body,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
            px(cx),
            px(cy),
            px(cx),
            px(cy),
            escape(ylabel)
        );
    }

    /// Polyline broken at missing or non-finite samples and clipped to the panel.
    fn series(&mut self, p: &Panel, points: &[(f64, Option<f64>)], stroke: &str) {
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, body: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(
                    body,
                    "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    run.join(" ")
                );
            }
            run.clear();
        };
        for &(x, y) in points {
            match y {
                Some(y) if y.is_finite() && x.is_finite() => {
                    let yc = p.sy(y).clamp(p.top, p.bottom());
                    run.push(format!("{},{}", px(p.sx(x)), px(yc)));
                }
                _ => flush(&mut run, &mut self.body),
            }
        }
        flush(&mut run, &mut self.body);
    }

    fn legend(&mut self, p: &Panel, labels: &[String]) {
        for (i, l) in labels.iter().enumerate() {
            let y = p.top + 14.0 + 16.0 * i as f64;
            let c = PALETTE[i % PALETTE.len()];
            self.line(
                (p.right() + 8.0, y - 4.0),
                (p.right() + 24.0, y - 4.0),
                c,
                " stroke-width=\"2\"",
            );
            self.text(p.right() + 28.0, y, "start", l);
        }
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, Option<f64>)>,
}

/// One panel with any number of line series.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let mut svg = Svg::new(1);
    let x = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0))).unwrap_or((0.0, 1.0));
    let y = bounds(series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1))).unwrap_or((0.0, 1.0));
    let p = Panel { top: MARGIN_TOP, x, y };
    svg.axes(&p, title, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        svg.series(&p, &s.points, PALETTE[i % PALETTE.len()]);
    }
    svg.legend(&p, &series.iter().map(|s| s.label.clone()).collect::<Vec<_>>());
    svg.finish()
}

/// Pixel-grid heatmap; `values[row][col]` sits at `(xs[col], ys[row])`.
/// Missing cells are drawn grey.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], ys: &[f64], values: &[Vec<Option<f64>>]) -> String {
    let mut svg = Svg::new(1);
    let half = |v: &[f64]| if v.len() > 1 { 0.5 * (v[1] - v[0]).abs() } else { 0.5 };
    let (hx, hy) = (half(xs), half(ys));
    let x = (
        xs.first().copied().unwrap_or(0.0) - hx,
        xs.last().copied().unwrap_or(1.0) + hx,
    );
    let y = (
        ys.first().copied().unwrap_or(0.0) - hy,
        ys.last().copied().unwrap_or(1.0) + hy,
    );
    let p = Panel { top: MARGIN_TOP, x, y };
    let (lo, hi) = bounds(values.iter().flatten().filter_map(|v| *v)).unwrap_or((0.0, 1.0));
    for (r, &yv) in ys.iter().enumerate() {
        for (c, &xv) in xs.iter().enumerate() {
            let fill = match values.get(r).and_then(|row| row.get(c)).copied().flatten() {
                Some(v) if v.is_finite() => colour((v - lo) / (hi - lo)),
                Some(v) if v > 0.0 => colour(1.0),
                _ => "#bbbbbb".to_string(),
            };
            let (x0, x1) = (p.sx(xv - hx), p.sx(xv + hx));
            let (y0, y1) = (p.sy(yv + hy), p.sy(yv - hy));
            let _ = writeln!(
                svg.body,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>",
                px(x0.min(x1)),
                px(y0.min(y1)),
                px((x1 - x0).abs()),
                px((y1 - y0).abs())
            );
        }
    }
    svg.axes(&p, title, xlabel, ylabel);
    // colour bar
    let (bx, bw) = (p.right() + 16.0, 14.0);
    let steps = 32;
    for i in 0..steps {
        let t0 = i as f64 / steps as f64;
        let ya = p.bottom() - t0 * (p.bottom() - p.top);
        let yb = p.bottom() - (t0 + 1.0 / steps as f64) * (p.bottom() - p.top);
        let _ = writeln!(
            svg.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            px(bx),
            px(yb),
            px(bw),
            px(ya - yb),
            colour(t0 + 0.5 / steps as f64)
        );
    }
    svg.text(bx + bw + 4.0, p.bottom(), "start", &tick_label(lo));
    svg.text(bx + bw + 4.0, p.top + 10.0, "start", &tick_label(hi));
    svg.finish()
}

/// Delay above, transmission probability below, sharing the `ka` axis.
/// Vertical markers at `peaks`; a dashed line at `Δτ/τ0 = −1`.
pub fn timing_overlay(title: &str, ka: &[f64], delay: &[Option<f64>], t2: &[Option<f64>], peaks: &[f64]) -> String {
    let mut svg = Svg::new(2);
    let x = bounds(ka.iter().copied()).unwrap_or((0.0, 1.0));
    let dy = bounds(delay.iter().filter_map(|d| *d).chain([-1.0, 0.0])).unwrap_or((-1.0, 1.0));
    let ty = bounds(t2.iter().filter_map(|d| *d).chain([0.0])).unwrap_or((0.0, 1.0));
    let top = Panel {
        top: MARGIN_TOP,
        x,
        y: dy,
    };
    let bottom = Panel {
        top: PANEL_HEIGHT + MARGIN_TOP,
        x,
        y: ty,
    };
    svg.axes(&top, title, "ka", "Δτ/τ0");
    svg.axes(&bottom, "", "ka", "|T|²");
    let minus_one = top.sy(-1.0);
    svg.line(
        (top.left(), minus_one),
        (top.right(), minus_one),
        "#555555",
        " stroke-dasharray=\"6 4\"",
    );
    for &k in peaks {
        let xk = top.sx(k);
        for p in [&top, &bottom] {
            svg.line((xk, p.top), (xk, p.bottom()), "#999999", " stroke-dasharray=\"2 3\"");
        }
    }
    let d: Vec<(f64, Option<f64>)> = ka.iter().copied().zip(delay.iter().copied()).collect();
    let t: Vec<(f64, Option<f64>)> = ka.iter().copied().zip(t2.iter().copied()).collect();
    svg.series(&top, &d, PALETTE[0]);
    svg.series(&bottom, &t, PALETTE[1]);
    svg.finish()
}
