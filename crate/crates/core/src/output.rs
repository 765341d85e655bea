//! CSV and SVG emitters. CSV uses `,` separators, `.` decimals and LF line
//! endings; floats are written with Rust's shortest round-trip formatting.

use std::fmt::Write;

use crate::ks::{KSProfile, NeRow};

pub const PROFILE_HEADER: &str = "r,phi,stderr,m,estimator";
pub const NE_HEADER: &str = "function,sup_phi,tail_min,ratio,degenerate,ratio_refined,drift";

pub fn profile_csv(profile: &KSProfile) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for e in &profile.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.r, e.phi, e.stderr, e.m, profile.estimator
        );
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

pub fn ne_csv(rows: &[NeRow]) -> String {
    let mut out = String::from(NE_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.function,
            row.report.sup_phi,
            row.report.tail_min,
            opt(row.report.ratio),
            row.report.degenerate,
            opt(row.refined.ratio),
            opt(row.drift)
        );
    }
    out
}

/// Static log-log plot of `Phi` against `r`, one polyline per series.
pub fn svg_plot(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 56.0;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, s)| s.iter())
        .filter(|(r, v)| *r > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">log r</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">log Phi</text>"#,
        H / 2.0,
        H / 2.0
    );
    if !pts.is_empty() {
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in &pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let sx = if x1 > x0 {
            (W - 2.0 * PAD) / (x1 - x0)
        } else {
            0.0
        };
        let sy = if y1 > y0 {
            (H - 2.0 * PAD) / (y1 - y0)
        } else {
            0.0
        };
        let palette = [
            "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
        ];
        for (i, (_, s)) in series.iter().enumerate() {
            let coords: Vec<String> = s
                .iter()
                .filter(|(r, v)| *r > 0.0 && *v > 0.0 && v.is_finite())
                .map(|(r, v)| {
                    let x = PAD + (r.ln() - x0) * sx;
                    let y = H - PAD - (v.ln() - y0) * sy;
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            if coords.is_empty() {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<polyline points="{}" stroke="{}" fill="none" stroke-width="1.2"/>"#,
                coords.join(" "),
                palette[i % palette.len()]
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ks::{Estimator, ProfileEntry};

    #[test]
    fn profile_csv_layout() {
        let p = KSProfile {
            p: 2.0,
            sigma: 1.0,
            estimator: Estimator::CellQuadrature,
            entries: vec![ProfileEntry {
                r: 0.75,
                phi: 1.5,
                stderr: 0.0,
                m: 3,
                resolved: true,
            }],
        };
        assert_eq!(
            profile_csv(&p),
            "r,phi,stderr,m,estimator\n0.75,1.5,0,3,cell\n"
        );
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = svg_plot("a < b", &[("u".into(), vec![(0.5, 1.0), (0.25, 2.0)])]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("<polyline"));
    }
}
