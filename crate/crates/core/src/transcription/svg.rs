//! Minimal vector renderer from plot geometry to SVG.

use std::fmt::Write as _;

use crate::numfmt::format_sig;
use crate::stats::plot::{Geometry, PlotSpec};

const W: f64 = 480.0;
const H: f64 = 320.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 16.0;
const BOTTOM: f64 = 48.0;
const FILL: &str = "#4c72b0";

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

/// Fixed-precision coordinates keep the output stable and compact.
fn c(x: f64) -> String {
    format!("{x:.2}")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn rect(out: &mut String, x: f64, y: f64, w: f64, h: f64, fill: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="white" stroke-width="1"/>"#,
        c(x),
        c(y),
        c(w.max(0.0)),
        c(h.max(0.0))
    );
}

fn line(out: &mut String, x1: f64, y1: f64, x2: f64, y2: f64) {
    let _ = writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1"/>"#,
        c(x1),
        c(y1),
        c(x2),
        c(y2)
    );
}

fn text(out: &mut String, x: f64, y: f64, anchor: &str, s: &str) {
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="{anchor}">{}</text>"#, c(x), c(y), esc(s));
}

fn axes(out: &mut String, f: &Frame, spec: &PlotSpec, numeric_x: bool) {
    let (bx, by) = (LEFT, H - BOTTOM);
    line(out, bx, by, W - RIGHT, by);
    line(out, bx, by, bx, TOP);
    for k in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let y = f.py(v);
        line(out, bx - 4.0, y, bx, y);
        text(out, bx - 6.0, y + 4.0, "end", &format_sig(v, 4));
        if numeric_x {
            let v = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
            let x = f.px(v);
            line(out, x, by, x, by + 4.0);
            text(out, x, by + 16.0, "middle", &format_sig(v, 4));
        }
    }
    text(out, (LEFT + W - RIGHT) / 2.0, H - 8.0, "middle", &spec.x_label);
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-size="11" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        c((TOP + H - BOTTOM) / 2.0),
        c((TOP + H - BOTTOM) / 2.0),
        esc(&spec.y_label)
    );
}

fn categorical_bars(out: &mut String, levels: &[String], counts: &[u64], spec: &PlotSpec) {
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    let f = Frame::new(0.0, levels.len() as f64, 0.0, max);
    axes(out, &f, spec, false);
    for (i, (l, &n)) in levels.iter().zip(counts).enumerate() {
        let (xa, xb) = (f.px(i as f64 + 0.1), f.px(i as f64 + 0.9));
        rect(out, xa, f.py(n as f64), xb - xa, f.py(0.0) - f.py(n as f64), FILL);
        text(out, (xa + xb) / 2.0, H - BOTTOM + 16.0, "middle", l);
    }
}

/// Renders the plot as a standalone SVG document.
pub fn render_svg(spec: &PlotSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, "<title>{} plot of {}</title>", spec.kind().name(), esc(&spec.x_label));
    match &spec.geometry {
        Geometry::Histogram { breaks, counts } => {
            let max = counts.iter().copied().max().unwrap_or(0) as f64;
            let f = Frame::new(breaks[0], *breaks.last().expect("breaks"), 0.0, max);
            axes(&mut out, &f, spec, true);
            for (k, &n) in counts.iter().enumerate() {
                let (xa, xb) = (f.px(breaks[k]), f.px(breaks[k + 1]));
                rect(&mut out, xa, f.py(n as f64), xb - xa, f.py(0.0) - f.py(n as f64), FILL);
            }
        }
        Geometry::Bar { levels, counts } => categorical_bars(&mut out, levels, counts, spec),
        Geometry::Scatter { points } => {
            let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for [x, y] in points {
                x0 = x0.min(*x);
                x1 = x1.max(*x);
                y0 = y0.min(*y);
                y1 = y1.max(*y);
            }
            if points.is_empty() {
                (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
            }
            let f = Frame::new(x0, x1, y0, y1);
            axes(&mut out, &f, spec, true);
            for [x, y] in points {
                let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="2.5" fill="{FILL}"/>"#, c(f.px(*x)), c(f.py(*y)));
            }
        }
        Geometry::Box { groups } => {
            let lo = groups
                .iter()
                .flat_map(|g| g.outliers.iter().copied().chain([g.lower_whisker]))
                .fold(f64::INFINITY, f64::min);
            let hi = groups
                .iter()
                .flat_map(|g| g.outliers.iter().copied().chain([g.upper_whisker]))
                .fold(f64::NEG_INFINITY, f64::max);
            let f = Frame::new(0.0, groups.len() as f64, lo, hi);
            axes(&mut out, &f, spec, false);
            for (i, g) in groups.iter().enumerate() {
                let (xa, xb, xm) = (f.px(i as f64 + 0.25), f.px(i as f64 + 0.75), f.px(i as f64 + 0.5));
                line(&mut out, xm, f.py(g.lower_whisker), xm, f.py(g.q1));
                line(&mut out, xm, f.py(g.q3), xm, f.py(g.upper_whisker));
                rect(&mut out, xa, f.py(g.q3), xb - xa, f.py(g.q1) - f.py(g.q3), FILL);
                line(&mut out, xa, f.py(g.median), xb, f.py(g.median));
                for o in &g.outliers {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{}" cy="{}" r="2.5" fill="none" stroke="black"/>"#,
                        c(xm),
                        c(f.py(*o))
                    );
                }
                text(&mut out, xm, H - BOTTOM + 16.0, "middle", &g.group);
            }
        }
        Geometry::Mosaic { rects } => {
            let f = Frame::new(0.0, 1.0, 0.0, 1.0);
            axes(&mut out, &f, spec, false);
            let shades = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];
            let mut rows: Vec<&str> = rects.iter().map(|r| r.row_level.as_str()).collect();
            rows.sort_unstable();
            rows.dedup();
            let mut labelled = Vec::new();
            for r in rects {
                let shade = shades[rows.binary_search(&r.row_level.as_str()).unwrap_or(0) % shades.len()];
                let (xa, xb) = (f.px(r.x), f.px(r.x + r.width));
                let (ya, yb) = (f.py(r.y + r.height), f.py(r.y));
                rect(&mut out, xa, ya, xb - xa, yb - ya, shade);
                if !labelled.contains(&r.col_level) {
                    labelled.push(r.col_level.clone());
                    text(&mut out, (xa + xb) / 2.0, H - BOTTOM + 16.0, "middle", &r.col_level);
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
