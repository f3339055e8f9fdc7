//! SVG heatmaps: darker cells are larger entries, masked cells are crossed.

use std::fmt::Write;

const CELL: f64 = 56.0;
const LABEL: f64 = 110.0;
const TOP: f64 = 150.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Gray level for `t` in `[0, 1]`: 0 → white, 1 → near black.
fn shade(t: f64) -> u8 {
    (245.0 - 225.0 * t.clamp(0.0, 1.0)).round() as u8
}

/// Render a square matrix with min–max scaling over its unmasked entries.
pub fn render_heatmap(title: &str, names: &[String], m: &[Vec<Option<f64>>]) -> String {
    let n = names.len();
    let values: Vec<f64> = m.iter().flatten().flatten().copied().collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let width = LABEL + CELL * n as f64 + 20.0;
    let height = TOP + CELL * n as f64 + 50.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="13">{}</text>"#, escape(title));
    for (j, name) in names.iter().enumerate() {
        let x = LABEL + CELL * (j as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" font-size="11" transform="rotate(-60 {x} {})">{}</text>"#,
            TOP - 6.0,
            TOP - 6.0,
            escape(name)
        );
    }
    for (i, name) in names.iter().enumerate() {
        let y = TOP + CELL * (i as f64 + 0.5) + 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" font-size="11" text-anchor="end">{}</text>"#,
            LABEL - 6.0,
            escape(name)
        );
        for j in 0..n {
            let (x0, y0) = (LABEL + CELL * j as f64, TOP + CELL * i as f64);
            match m[i][j] {
                Some(v) => {
                    let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
                    let g = shade(t);
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x0}" y="{y0}" width="{CELL}" height="{CELL}" fill="rgb({g},{g},{g})" stroke="gray"/>"#
                    );
                    let ink = if t > 0.55 { "white" } else { "black" };
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" font-size="10" text-anchor="middle" fill="{ink}">{v:.3}</text>"#,
                        x0 + CELL / 2.0,
                        y0 + CELL / 2.0 + 3.0
                    );
                }
                None => {
                    let (x1, y1) = (x0 + CELL, y0 + CELL);
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x0}" y="{y0}" width="{CELL}" height="{CELL}" fill="white" stroke="gray"/>"#
                    );
                    let _ = writeln!(
                        s,
                        r#"<path d="M{x0} {y0} L{x1} {y1} M{x1} {y0} L{x0} {y1}" stroke="gray" class="masked"/>"#
                    );
                }
            }
        }
    }
    let scale = if values.is_empty() {
        "scale: no unmasked entries".to_string()
    } else {
        format!("scale: min {lo:.4e} (lightest) to max {hi:.4e} (darkest)")
    };
    let _ = writeln!(
        s,
        r#"<text x="10" y="{}" font-size="11">{}</text>"#,
        TOP + CELL * n as f64 + 30.0,
        scale
    );
    s.push_str("</svg>\n");
    s
}
