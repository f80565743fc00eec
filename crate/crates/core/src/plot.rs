//! Static SVG log-log decay plots for bound scans.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spherical::BoundReport;

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Curve {
    label: String,
    color: &'static str,
    dash: &'static str,
    pts: Vec<(f64, f64)>,
}

fn curves(report: &BoundReport) -> Vec<Curve> {
    let mut out = Vec::new();
    let mut c = 0;
    for hi in 0..report.h_grid.len() {
        for ri in 0..report.rays.len() {
            let pts: Vec<_> = report
                .ray_points(hi, ri)
                .filter(|p| p.t > 0.0)
                .collect();
            if pts.is_empty() {
                continue;
            }
            let color = COLORS[c % COLORS.len()];
            c += 1;
            let series: [(&str, &str, fn(&crate::spherical::ScanPoint) -> f64); 3] = [
                ("|phi|", "", |p| p.abs_phi),
                ("new", "6 3", |p| p.new_bound),
                ("old", "2 3", |p| p.old_bound),
            ];
            for (name, dash, f) in series {
                out.push(Curve {
                    label: format!("H{hi} ray{ri} {name}"),
                    color,
                    dash,
                    pts: pts
                        .iter()
                        .map(|p| (p.t, f(p)))
                        .filter(|(_, y)| *y > 0.0 && y.is_finite())
                        .collect(),
                });
            }
        }
    }
    out
}

/// Renders `|phi|`, the new bound and the old bound against `t` on log-log axes, one curve
/// triple per (H, ray) pair.
pub fn render_svg(report: &BoundReport) -> Result<String> {
    let cs = curves(report);
    if cs.iter().all(|c| c.pts.is_empty()) {
        return Err(Error::InvalidArgument("report has no plottable points".into()));
    }
    let all = cs.iter().flat_map(|c| c.pts.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (x0, x1, y0, y1) = (x0.floor(), x1.ceil(), y0.floor(), y1.ceil());
    let sx = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    )
    .unwrap();
    for e in x0 as i32..=x1 as i32 {
        let x = sx(10f64.powi(e));
        writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="lightgray"/>"#, MARGIN, H - MARGIN).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, H - MARGIN + 16.0).unwrap();
    }
    for e in y0 as i32..=y1 as i32 {
        let y = sy(10f64.powi(e));
        writeln!(s, r#"<line x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="lightgray"/>"#, W - MARGIN).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, MARGIN - 6.0, y + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#, W / 2.0, H - 16.0).unwrap();
    for (n, c) in cs.iter().enumerate() {
        if c.pts.is_empty() {
            continue;
        }
        let path: Vec<String> = c.pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if c.dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{}""#, c.dash)
        };
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"><title>{}</title></polyline>"#,
            c.color,
            path.join(" "),
            c.label
        )
        .unwrap();
        if n < 24 {
            let ly = MARGIN + 12.0 + 13.0 * n as f64;
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                W - MARGIN - 150.0,
                W - MARGIN - 126.0,
                c.color,
                W - MARGIN - 120.0,
                ly + 4.0,
                c.label
            )
            .unwrap();
        }
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}

/// Writes the plot; on error no file is created.
pub fn emit_plot(report: &BoundReport, path: &Path) -> Result<()> {
    let svg = render_svg(report)?;
    std::fs::write(path, svg)?;
    Ok(())
}
