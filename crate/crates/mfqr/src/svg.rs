//! Minimal SVG drawing: framed panels with axes, points, lines, bands and box plots.

use std::fmt::Write as _;

pub const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Svg { width, height, body: String::new() }
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-size="{size}" font-family="sans-serif">{}</text>"#,
            escape(s)
        );
    }

    pub fn rotated_text(&mut self, x: f64, y: f64, s: &str, size: f64) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle" font-size="{size}" font-family="sans-serif" transform="rotate(-90 {x:.1} {y:.1})">{}</text>"#,
            escape(s)
        );
    }

    fn raw(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// `(lo, hi)` of the finite values, padded by 5%; a unit interval around a constant.
pub fn padded_range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Plot area in pixels with data ranges on both axes.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Frame {
    pub fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    pub fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn ticks(range: (f64, f64)) -> Vec<f64> {
        (0..=4).map(|k| range.0 + (range.1 - range.0) * f64::from(k) / 4.0).collect()
    }

    /// Border, tick labels, title and axis labels. `x_ticks` replaces numeric x ticks.
    pub fn axes(&self, svg: &mut Svg, title: &str, xlabel: &str, ylabel: &str, x_ticks: Option<&[String]>) {
        svg.raw(&format!(
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
            self.left, self.top, self.width, self.height
        ));
        let bottom = self.top + self.height;
        match x_ticks {
            Some(labels) => {
                for (k, l) in labels.iter().enumerate() {
                    svg.text(self.px(k as f64 + 1.0), bottom + 16.0, l, "middle", 10.0);
                }
            }
            None => {
                for t in Self::ticks(self.x) {
                    svg.text(self.px(t), bottom + 16.0, &format!("{t:.2}"), "middle", 10.0);
                }
            }
        }
        for t in Self::ticks(self.y) {
            svg.text(self.left - 6.0, self.py(t) + 3.0, &format!("{t:.2}"), "end", 10.0);
        }
        svg.text(self.left + self.width / 2.0, self.top - 8.0, title, "middle", 13.0);
        svg.text(self.left + self.width / 2.0, bottom + 34.0, xlabel, "middle", 11.0);
        svg.rotated_text(self.left - 46.0, self.top + self.height / 2.0, ylabel, 11.0);
    }

    pub fn points(&self, svg: &mut Svg, xs: &[f64], ys: &[f64], color: &str, radius: f64, opacity: f64) {
        let mut s = format!(r#"<g fill="{color}" fill-opacity="{opacity}">"#);
        for (&x, &y) in xs.iter().zip(ys) {
            let _ = write!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="{radius}"/>"#, self.px(x), self.py(y));
        }
        s.push_str("</g>");
        svg.raw(&s);
    }

    fn path(&self, xs: &[f64], ys: &[f64]) -> String {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| format!("{:.1},{:.1}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn line(&self, svg: &mut Svg, xs: &[f64], ys: &[f64], color: &str, width: f64, dashed: bool) {
        let dash = if dashed { r#" stroke-dasharray="5,3""# } else { "" };
        svg.raw(&format!(
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
            self.path(xs, ys)
        ));
    }

    /// Filled region between `lo` and `hi` over ascending `xs`.
    pub fn band(&self, svg: &mut Svg, xs: &[f64], lo: &[f64], hi: &[f64], color: &str, opacity: f64) {
        let rx: Vec<f64> = xs.iter().rev().copied().collect();
        let rlo: Vec<f64> = lo.iter().rev().copied().collect();
        svg.raw(&format!(
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="{opacity}" stroke="none"/>"#,
            self.path(xs, hi),
            self.path(&rx, &rlo)
        ));
    }

    pub fn hline(&self, svg: &mut Svg, y: f64, color: &str) {
        let (a, b) = (self.left, self.left + self.width);
        svg.raw(&format!(
            r#"<line x1="{a:.1}" y1="{y:.1}" x2="{b:.1}" y2="{y:.1}" stroke="{color}" stroke-dasharray="4,3"/>"#,
            y = self.py(y)
        ));
    }

    /// Box at x-position `pos`: quartiles, median and 1.5 IQR whiskers.
    pub fn boxplot(&self, svg: &mut Svg, pos: f64, values: &[f64], color: &str) {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return;
        }
        v.sort_by(f64::total_cmp);
        let q = |a: f64| mfqr_core::local::sorted_quantile(&v, a);
        let (q1, med, q3) = (q(0.25), q(0.5), q(0.75));
        let iqr = q3 - q1;
        let lo = v.iter().copied().find(|&x| x >= q1 - 1.5 * iqr).unwrap_or(q1);
        let hi = v.iter().rev().copied().find(|&x| x <= q3 + 1.5 * iqr).unwrap_or(q3);
        let cx = self.px(pos);
        let half = 0.3 * self.width / (self.x.1 - self.x.0);
        svg.raw(&format!(
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{color}"/>"#,
            self.py(lo),
            self.py(hi)
        ));
        svg.raw(&format!(
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.3" stroke="{color}"/>"#,
            cx - half,
            self.py(q3),
            2.0 * half,
            (self.py(q1) - self.py(q3)).max(0.5)
        ));
        svg.raw(&format!(
            r#"<line x1="{:.1}" y1="{m:.1}" x2="{:.1}" y2="{m:.1}" stroke="{color}" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            m = self.py(med)
        ));
        let outliers: Vec<f64> = v.iter().copied().filter(|&x| x < lo || x > hi).collect();
        self.points(svg, &vec![pos; outliers.len()], &outliers, color, 2.0, 0.8);
    }

    pub fn legend(&self, svg: &mut Svg, entries: &[(&str, &str)]) {
        for (k, (label, color)) in entries.iter().enumerate() {
            let y = self.top + 14.0 + 14.0 * k as f64;
            let x = self.left + self.width - 130.0;
            svg.raw(&format!(r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{color}"/>"#, y - 9.0));
            svg.text(x + 14.0, y, label, "start", 10.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_mapping() {
        assert_eq!(padded_range([1.0, 1.0]), (0.5, 1.5));
        assert_eq!(padded_range([f64::NAN]), (0.0, 1.0));
        let (lo, hi) = padded_range([0.0, 10.0]);
        assert!((lo + 0.5).abs() < 1e-12 && (hi - 10.5).abs() < 1e-12);
        let f = Frame { left: 10.0, top: 20.0, width: 100.0, height: 50.0, x: (0.0, 1.0), y: (0.0, 2.0) };
        assert_eq!(f.px(0.5), 60.0);
        assert_eq!(f.py(2.0), 20.0);
        assert_eq!(f.py(0.0), 70.0);
    }

    #[test]
    fn text_is_escaped() {
        let mut s = Svg::new(10.0, 10.0);
        s.text(0.0, 0.0, "a<b & \"c\"", "start", 9.0);
        let out = s.finish();
        assert!(out.contains("a&lt;b &amp; &quot;c&quot;"));
        assert!(roxmltree::Document::parse(&out).is_ok());
    }
}
