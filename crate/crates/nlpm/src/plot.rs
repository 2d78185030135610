//! Minimal static SVG line charts. CSV stays the ground truth; these are
//! for looking at.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

fn color(k: usize, n: usize) -> String {
    // blue to red ramp, fixed so output is reproducible
    let t = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
    let r = (40.0 + 200.0 * t) as u8;
    let b = (220.0 - 180.0 * t) as u8;
    format!("#{r:02x}50{b:02x}")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let tf = |y: f64| if self.log_y { if y > 0.0 { y.log10() } else { f64::NAN } } else { y };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (x, tf(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let ylab = |v: f64| if self.log_y { format!("1e{v:.1}") } else { format!("{v:.3e}") };
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}" text-anchor="middle">{:.3e}</text>"#, H - PAD + 16.0, x0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{:.3e}</text>"#, W - PAD, H - PAD + 16.0, x1);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, ylab(y0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, ylab(y1));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );
        let n = self.series.len();
        for (k, ser) in self.series.iter().enumerate() {
            let mut d = String::new();
            let mut pen = false;
            for &(x, y) in &ser.points {
                let y = tf(y);
                if x.is_finite() && y.is_finite() {
                    let _ = write!(d, "{}{:.2},{:.2} ", if pen { "L" } else { "M" }, sx(x), sy(y));
                    pen = true;
                } else {
                    pen = false;
                }
            }
            let c = color(k, n);
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{c}" stroke-width="1.2"/>"#, d.trim_end());
            if n <= 8 {
                let ly = PAD + 14.0 + 14.0 * k as f64;
                let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{c}" text-anchor="end">{}</text>"#, W - PAD - 6.0, esc(&ser.label));
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_and_skips_gaps() {
        let c = Chart {
            title: "a < b".into(),
            x_label: "x".into(),
            y_label: "u".into(),
            log_y: true,
            series: vec![Series { label: "s".into(), points: vec![(0.0, 1.0), (1.0, 0.0), (2.0, 10.0)] }],
        };
        let svg = c.to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        // the zero breaks the log-scale path into two pieces
        assert_eq!(svg.matches('M').count(), 2);
    }

    #[test]
    fn empty_chart_still_renders() {
        let c = Chart { title: String::new(), x_label: String::new(), y_label: String::new(), log_y: false, series: vec![] };
        assert!(c.to_svg().contains("</svg>"));
    }
}
