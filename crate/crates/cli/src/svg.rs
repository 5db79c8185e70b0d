//! Minimal SVG writers for ray fans and inequality margins.

use std::fmt::Write;

use rigidity_core::{Domain, Vec2};

const SIZE: f64 = 480.0;

struct Frame {
    lo: Vec2,
    scale: f64,
}

impl Frame {
    fn for_domain(domain: &Domain) -> Self {
        let (lo, hi) = domain.bounding_box();
        let pad = 0.05 * (hi - lo).max();
        let lo = lo - Vec2::new(pad, pad);
        let span = (hi - lo).max() + pad;
        Self { lo, scale: SIZE / span }
    }

    fn map(&self, p: &Vec2) -> (f64, f64) {
        ((p.x - self.lo.x) * self.scale, SIZE - (p.y - self.lo.y) * self.scale)
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: &[Vec2], style: &str) {
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = frame.map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polyline points="{}" {style}/>"#, coords.join(" "));
}

/// The boundary of `domain` and one polyline per ray.
pub fn ray_fan(domain: &Domain, rays: &[Vec<Vec2>]) -> String {
    let frame = Frame::for_domain(domain);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let b = domain.boundary();
    let l = b.total_length();
    let boundary: Vec<Vec2> = (0..=400).map(|k| b.point(l * k as f64 / 400.0)).collect();
    polyline(&mut out, &frame, &boundary, r#"fill="none" stroke="black" stroke-width="1.5""#);
    for ray in rays {
        polyline(&mut out, &frame, ray, r##"fill="none" stroke="#1f5fa8" stroke-width="1""##);
    }
    out.push_str("</svg>\n");
    out
}

/// Paired bars of left and right sides per resolution.
pub fn margin_bars(labels: &[String], lhs: &[f64], rhs: &[f64]) -> String {
    let (w, h) = (120.0 * labels.len().max(1) as f64 + 60.0, 300.0);
    let top = lhs.iter().chain(rhs).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let base = h - 40.0;
    for (k, label) in labels.iter().enumerate() {
        let x0 = 40.0 + 120.0 * k as f64;
        for (off, v, color) in [(0.0, lhs[k], "#c0392b"), (45.0, rhs[k], "#2471a3")] {
            let bh = (v.abs() / top) * (base - 20.0);
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="40" height="{:.1}" fill="{color}"/>"#,
                x0 + off,
                base - bh,
                bh
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif">{label}</text>"#,
            x0,
            base + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="10" y="14" font-size="12" font-family="sans-serif">lhs (red) vs rhs (blue)</text>"#
    );
    out.push_str("</svg>\n");
    out
}
