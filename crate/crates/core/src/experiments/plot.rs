//! Minimal self-contained SVG charts.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD_L: f64 = 64.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Optional symmetric error bar per point.
    pub errors: Option<Vec<f64>>,
    /// Draw as a step line (held until the next sample).
    pub step: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    }
}

fn header(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>
"#,
        W / 2.0,
        esc(title),
        PAD_L + (W - PAD_L - PAD_R) / 2.0,
        H - 10.0,
        esc(xlabel),
        PAD_T + (H - PAD_T - PAD_B) / 2.0,
        esc(ylabel)
    );
    s
}

fn axes(s: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let (l, r, t, b) = (PAD_L, W - PAD_R, PAD_T, H - PAD_B);
    let _ = writeln!(s, r##"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="#333"/>"##);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let px = l + f * (r - l);
        let py = b - f * (b - t);
        let _ = writeln!(
            s,
            r##"<text x="{px}" y="{}" text-anchor="middle">{}</text><text x="{}" y="{}" text-anchor="end">{}</text><line x1="{l}" x2="{r}" y1="{py}" y2="{py}" stroke="#eee"/>"##,
            b + 16.0,
            tick(xv),
            l - 6.0,
            py + 4.0,
            tick(yv)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Line chart of one or more series sharing axes.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = range(series.iter().flat_map(|s| {
        s.points.iter().enumerate().flat_map(move |(i, p)| {
            let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
            [p.1 - e, p.1 + e]
        })
    }));
    let px = |x: f64| PAD_L + (x - xr.0) / (xr.1 - xr.0) * (W - PAD_L - PAD_R);
    let py = |y: f64| H - PAD_B - (y - yr.0) / (yr.1 - yr.0) * (H - PAD_T - PAD_B);
    let mut s = header(title, xlabel, ylabel);
    axes(&mut s, xr, yr);
    for (k, ser) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut prev: Option<f64> = None;
        for &(x, y) in ser.points.iter().filter(|p| p.1.is_finite()) {
            match prev {
                None => {
                    let _ = write!(d, "M{:.2},{:.2}", px(x), py(y));
                }
                Some(py_prev) if ser.step => {
                    let _ = write!(d, " L{:.2},{:.2} L{:.2},{:.2}", px(x), py_prev, px(x), py(y));
                }
                Some(_) => {
                    let _ = write!(d, " L{:.2},{:.2}", px(x), py(y));
                }
            }
            prev = Some(py(y));
        }
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>"#);
        if !ser.step {
            for (i, &(x, y)) in ser.points.iter().enumerate().filter(|(_, p)| p.1.is_finite()) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, px(x), py(y));
                if let Some(e) = &ser.errors {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1:.2}" y2="{2:.2}" stroke="{c}"/>"#,
                        px(x),
                        py(y - e[i]),
                        py(y + e[i])
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/><text x="{}" y="{}">{}</text>"#,
            W - PAD_R - 150.0,
            PAD_T + 4.0 + 16.0 * k as f64,
            W - PAD_R - 134.0,
            PAD_T + 13.0 + 16.0 * k as f64,
            esc(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grouped bar chart: one group per category, one bar per series.
pub fn bar_chart(title: &str, ylabel: &str, categories: &[String], series: &[(&str, Vec<f64>)]) -> String {
    let ymax = series
        .iter()
        .flat_map(|s| s.1.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.05;
    let mut s = header(title, "", ylabel);
    axes(&mut s, (0.0, categories.len() as f64), (0.0, ymax));
    let group_w = (W - PAD_L - PAD_R) / categories.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (g, cat) in categories.iter().enumerate() {
        let gx = PAD_L + g as f64 * group_w + group_w * 0.1;
        for (k, (_, vals)) in series.iter().enumerate() {
            let v = vals.get(g).copied().unwrap_or(0.0).max(0.0);
            let h = v / ymax * (H - PAD_T - PAD_B);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                gx + k as f64 * bar_w,
                H - PAD_B - h,
                bar_w,
                h,
                COLORS[k % COLORS.len()]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w * 0.4,
            H - PAD_B + 30.0,
            esc(cat)
        );
    }
    for (k, (label, _)) in series.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            W - PAD_R - 150.0,
            PAD_T + 4.0 + 16.0 * k as f64,
            COLORS[k % COLORS.len()],
            W - PAD_R - 134.0,
            PAD_T + 13.0 + 16.0 * k as f64,
            esc(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let l = line_chart(
            "loss <vs> α",
            "α",
            "loss",
            &[Series {
                label: "snn",
                points: vec![(0.3, 0.2), (0.6, 0.1), (1.0, f64::NAN)],
                errors: Some(vec![0.01, 0.02, 0.0]),
                step: false,
            }],
        );
        assert!(l.starts_with("<svg") && l.trim_end().ends_with("</svg>"));
        assert!(l.contains("&lt;vs&gt;"));
        assert!(!l.contains("NaN"));
        let b = bar_chart("flops", "FLOPs", &["a".into(), "b".into()], &[("cnn", vec![1.0, 2.0]), ("snn", vec![0.5, 0.1])]);
        assert_eq!(b.matches("<rect").count(), 1 + 4 + 2);
    }
}
