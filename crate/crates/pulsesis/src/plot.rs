//! Minimal SVG line plot of `S`, `I` and `N` against time.

use std::fmt::Write;

use pulsesis_core::integrator::Sample;
use pulsesis_core::Trajectory;

const W: f64 = 800.0;
const H: f64 = 420.0;
const PAD: f64 = 48.0;
const MAX_POINTS: usize = 2000;

pub fn trajectory_svg(traj: &Trajectory, title: &str) -> String {
    let samples = &traj.samples;
    let t_max = traj.end.max(f64::MIN_POSITIVE);
    let y_max = samples.iter().map(|s| s.n().max(s.s).max(s.i)).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let x = |t: f64| PAD + (W - 2.0 * PAD) * t / t_max;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * v.clamp(0.0, y_max) / y_max;
    let stride = samples.len().div_ceil(MAX_POINTS).max(1);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD},{} H{} M{PAD},{} V{PAD}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{t_max:.4}</text>"#,
        W - PAD - 20.0,
        H - PAD + 16.0
    );
    let _ =
        writeln!(svg, r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{y_max:.4e}</text>"#, PAD - 4.0);
    for r in &traj.impulses {
        let _ = writeln!(
            svg,
            r##"<line x1="{0:.2}" y1="{PAD}" x2="{0:.2}" y2="{1}" stroke="#999" stroke-dasharray="3,3"/>"##,
            x(r.t),
            H - PAD
        );
    }
    type Series = (&'static str, &'static str, fn(&Sample) -> f64);
    let series: [Series; 3] = [("S", "#1f77b4", |s| s.s), ("I", "#d62728", |s| s.i), ("N", "#2ca02c", |s| s.n())];
    for (k, (label, color, get)) in series.iter().enumerate() {
        let mut pts = String::new();
        for (j, s) in samples.iter().enumerate() {
            // keep both sides of every impulse so jumps stay visible
            if j % stride != 0 && s.kind == pulsesis_core::integrator::SampleKind::Regular && j + 1 != samples.len() {
                continue;
            }
            let _ = write!(pts, "{:.2},{:.2} ", x(s.t), y(get(s)));
        }
        let _ =
            writeln!(svg, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, pts.trim_end());
        let ly = PAD + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12" fill="{color}">{label}</text>"#,
            W - PAD - 24.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
