//! Minimal SVG plots for the reports: polar histograms, line traces and
//! scatter plots with a fitted line. Output is deterministic (fixed decimal
//! formatting) so plots can be compared byte for byte.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(title: &str, desc: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, "<desc>{}</desc>", escape(desc));
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    s
}

/// Wedges proportional to bin counts; `period` is 180 or 360 degrees and is
/// drawn over the full circle.
pub fn polar_histogram(edges_deg: &[f64], counts: &[usize], period: f64, title: &str, desc: &str) -> String {
    let mut s = open(title, desc);
    let (cx, cy) = (W / 2.0, H / 2.0 + 10.0);
    let rmax = H / 2.0 - MARGIN + 10.0;
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    for f in [0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(s, r##"<circle cx="{cx:.1}" cy="{cy:.1}" r="{:.2}" fill="none" stroke="#ccc"/>"##, rmax * f);
    }
    let scale = 360.0 / period;
    for (i, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let r = rmax * c as f64 / peak;
        let a0 = (edges_deg[i] * scale).to_radians();
        let a1 = (edges_deg[i + 1] * scale).to_radians();
        let p = |a: f64| (cx + r * a.cos(), cy - r * a.sin());
        let (x0, y0) = p(a0);
        let (x1, y1) = p(a1);
        let large = if a1 - a0 > std::f64::consts::PI { 1 } else { 0 };
        let _ = writeln!(
            s,
            r##"<path d="M{cx:.2},{cy:.2} L{x0:.2},{y0:.2} A{r:.2},{r:.2} 0 {large} 0 {x1:.2},{y1:.2} Z" fill="#1f77b4" fill-opacity="0.7" stroke="#0b3c5d"/>"##
        );
    }
    for k in 0..4 {
        let a = (k as f64 * 90.0).to_radians();
        let label = k as f64 * 90.0 / scale;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}°</text>"#,
            cx + (rmax + 14.0) * a.cos(),
            cy - (rmax + 14.0) * a.sin() + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let range = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = range(&mut xs.clone());
        let (y0, y1) = range(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        let _ = writeln!(s, r#"<polyline points="{l},{t} {l},{b} {r},{b}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="{l}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 14.0, fmt_tick(self.x0));
        let _ = writeln!(s, r#"<text x="{r}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 14.0, fmt_tick(self.x1));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{b}" text-anchor="end">{}</text>"#, l - 4.0, fmt_tick(self.y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 4.0, t + 4.0, fmt_tick(self.y1));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// One polyline per named series.
pub fn line_traces(series: &[(String, Vec<(f64, f64)>)], xlabel: &str, ylabel: &str, title: &str, desc: &str) -> String {
    let mut s = open(title, desc);
    let all = series.iter().flat_map(|(_, pts)| pts.iter());
    let frame = Frame::fit(all.clone().map(|p| p.0), all.map(|p| p.1));
    frame.axes(&mut s, xlabel, ylabel);
    for (k, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, coords.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{colour}">{}</text>"#,
            W - MARGIN + 4.0,
            MARGIN + 14.0 * k as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter of `(x, y)` with the line `slope·x + intercept` across the data
/// range.
pub fn scatter_with_fit(points: &[(f64, f64)], slope: f64, intercept: f64, xlabel: &str, ylabel: &str, title: &str, desc: &str) -> String {
    let mut s = open(title, desc);
    let xs = points.iter().map(|p| p.0);
    let line_y = xs.clone().map(|x| slope * x + intercept);
    let frame = Frame::fit(xs.clone(), points.iter().map(|p| p.1).chain(line_y));
    frame.axes(&mut s, xlabel, ylabel);
    for &(x, y) in points {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4" fill-opacity="0.7"/>"##, frame.px(x), frame.py(y));
    }
    let (a, b) = (frame.x0, frame.x1);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="1.5"/>"##,
        frame.px(a),
        frame.py(slope * a + intercept),
        frame.px(b),
        frame.py(slope * b + intercept)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well_formed(s: &str) -> bool {
        s.starts_with("<svg ") && s.trim_end().ends_with("</svg>") && s.contains("<desc>")
    }

    #[test]
    fn polar_has_one_wedge_per_nonempty_bin() {
        let edges: Vec<f64> = (0..=18).map(|i| i as f64 * 10.0).collect();
        let mut counts = vec![0; 18];
        counts[3] = 5;
        counts[9] = 2;
        let svg = polar_histogram(&edges, &counts, 180.0, "Orientation", "config_hash=abc");
        assert!(well_formed(&svg));
        assert_eq!(svg.matches("<path ").count(), 2);
        assert!(svg.contains("<desc>config_hash=abc</desc>"));
    }

    #[test]
    fn traces_and_scatter() {
        let series = vec![("a<1>".to_string(), vec![(0.0, 1.0), (1.0, 2.0)]), ("b".to_string(), vec![(0.0, 0.0), (2.0, 1.0)])];
        let svg = line_traces(&series, "s (µm)", "Re", "Re", "d");
        assert!(well_formed(&svg));
        assert_eq!(svg.matches("<polyline ").count(), 3);
        assert!(svg.contains("a&lt;1&gt;"));
        let sc = scatter_with_fit(&[(1.0, 2.0), (2.0, 4.1), (3.0, 5.9)], 2.0, 0.0, "x", "y", "t", "d");
        assert!(well_formed(&sc));
        assert_eq!(sc.matches("<circle ").count(), 3);
        assert_eq!(sc, scatter_with_fit(&[(1.0, 2.0), (2.0, 4.1), (3.0, 5.9)], 2.0, 0.0, "x", "y", "t", "d"));
    }

    #[test]
    fn empty_inputs_still_render() {
        assert!(well_formed(&line_traces(&[], "x", "y", "t", "d")));
        assert!(well_formed(&scatter_with_fit(&[], 1.0, 0.0, "x", "y", "t", "d")));
        assert!(well_formed(&polar_histogram(&[0.0, 360.0], &[0], 360.0, "t", "d")));
    }
}
