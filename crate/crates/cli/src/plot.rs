//! Minimal self-contained SVG plots of EP strength.

use std::fmt::Write as _;

use epscan_core::scan::{ObservableName, ScanResult, SeamPoint, EP_STRENGTH_CAP};

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

// viridis control points
const PALETTE: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let k = (t.floor() as usize).min(PALETTE.len() - 2);
    let f = t - k as f64;
    let (a, b) = (PALETTE[k], PALETTE[k + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn log_value(v: f64) -> Option<f64> {
    (v > 0.0 && !v.is_nan()).then(|| v.min(EP_STRENGTH_CAP).log10())
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle">{title}</text>"#, LEFT + (W - LEFT - RIGHT) / 2.0);
}

fn frame(out: &mut String, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64), ylog: bool) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = LEFT + f * pw;
        let py = TOP + ph - f * ph;
        let xv = x.0 + f * (x.1 - x.0);
        let yv = y.0 + f * (y.1 - y.0);
        let ylab = if ylog { format!("1e{yv:.1}") } else { format!("{yv:.3}") };
        let _ = writeln!(out, r#"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{px}" y="{}" text-anchor="middle">{xv:.3}</text>"#, TOP + ph + 18.0);
        let _ = writeln!(out, r#"<line x1="{}" y1="{py}" x2="{LEFT}" y2="{py}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{ylab}</text>"#, LEFT - 8.0, py + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, LEFT + pw / 2.0, H - 12.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{ylabel}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
}

/// Log-scale line plot (1D) or heatmap with colorbar (2D) of EP strength,
/// with detected seam points marked.
pub fn ep_strength_svg(r: &ScanResult, seam: &[SeamPoint]) -> String {
    let mut out = String::new();
    let x = (r.config.axis1.lo, r.config.axis1.hi);
    let xname = r.config.axis1.param.name();
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = |v: f64| LEFT + (v - x.0) / (x.1 - x.0) * pw;
    let logs: Vec<Option<f64>> = r.points.iter().map(|p| log_value(p.value(ObservableName::EpStrength))).collect();
    let lo = logs.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, if hi > lo { hi } else { lo + 1.0 }) } else { (0.0, 1.0) };
    match (&r.grid2, &r.config.axis2) {
        (Some(g2), Some(a2)) => {
            header(&mut out, "EP strength (log10)");
            let y = (a2.lo, a2.hi);
            let cw = pw / r.grid1.len() as f64;
            let ch = ph / g2.len() as f64;
            for i1 in 0..r.grid1.len() {
                for i2 in 0..g2.len() {
                    let fill = match logs[i1 * g2.len() + i2] {
                        Some(l) => color((l - lo) / (hi - lo)),
                        None => "#bbbbbb".into(),
                    };
                    let _ = writeln!(
                        out,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                        LEFT + i1 as f64 * cw,
                        TOP + ph - (i2 + 1) as f64 * ch,
                        cw + 0.5,
                        ch + 0.5
                    );
                }
            }
            for s in seam {
                let (cx, cy) = (LEFT + (s.i1 as f64 + 0.5) * cw, TOP + ph - (s.i2 as f64 + 0.5) * ch);
                let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2" fill="red"/>"#);
            }
            frame(&mut out, xname, a2.param.name(), x, y, false);
            let bx = W - RIGHT + 25.0;
            for k in 0..50 {
                let f = k as f64 / 49.0;
                let _ = writeln!(
                    out,
                    r#"<rect x="{bx}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
                    TOP + ph - (f * ph) - ph / 50.0,
                    ph / 50.0 + 0.5,
                    color(f)
                );
            }
            let _ = writeln!(out, r#"<rect x="{bx}" y="{TOP}" width="18" height="{ph}" fill="none" stroke="black"/>"#);
            let _ = writeln!(out, r#"<text x="{}" y="{}">1e{hi:.1}</text>"#, bx + 22.0, TOP + 10.0);
            let _ = writeln!(out, r#"<text x="{}" y="{}">1e{lo:.1}</text>"#, bx + 22.0, TOP + ph);
        }
        _ => {
            header(&mut out, "EP strength");
            let py = |l: f64| TOP + ph - (l - lo) / (hi - lo) * ph;
            let mut path = String::new();
            let mut pen = false;
            for (k, &a) in r.grid1.iter().enumerate() {
                match logs[k] {
                    Some(l) => {
                        let _ = write!(path, "{}{:.2},{:.2} ", if pen { "L" } else { "M" }, px(a), py(l));
                        pen = true;
                    }
                    None => pen = false,
                }
            }
            let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, path.trim_end());
            for s in seam {
                if let Some(l) = log_value(s.value) {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="red"/>"#, px(s.axis1), py(l));
                }
            }
            frame(&mut out, xname, "ep_strength", x, (lo, hi), true);
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(2.0), "#fde725");
    }
}
