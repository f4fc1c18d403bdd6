//! Static SVG scatter of an amoeba cloud with cone and boundary overlays.

use std::fmt::Write;

use sphamoeba::slog::{AmoebaCloud, BoundaryCurves};
use sphamoeba::spaces::PolyCone;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;
const DEFAULT_VIEW: f64 = 5.0;

struct Viewport {
    r: f64,
}

impl Viewport {
    fn x(&self, q: f64) -> f64 {
        MARGIN + (q + self.r) / (2.0 * self.r) * (SIZE - 2.0 * MARGIN)
    }

    fn y(&self, q: f64) -> f64 {
        SIZE - self.x(q)
    }
}

/// The first two coordinates are plotted; a rank-one cloud is drawn on the
/// horizontal axis. The viewport is `[-R, R]²` with `R` the window (5 when
/// the cloud has none).
pub fn render(cloud: &AmoebaCloud, cone: &PolyCone, boundary: Option<&BoundaryCurves>) -> String {
    let vp = Viewport {
        r: cloud.window.unwrap_or(DEFAULT_VIEW),
    };
    let proj = |q: &[f64]| (q[0], q.get(1).copied().unwrap_or(0.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r#"<title>{} amoeba, t = {}, {} points</title>"#,
        cloud.family,
        cloud.t,
        cloud.points.len()
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let (ox, oy) = (vp.x(0.0), vp.y(0.0));
    let _ = writeln!(
        s,
        r##"<g stroke="#bbbbbb" stroke-width="1"><line x1="{MARGIN}" y1="{oy:.3}" x2="{:.3}" y2="{oy:.3}"/><line x1="{ox:.3}" y1="{MARGIN}" x2="{ox:.3}" y2="{:.3}"/></g>"##,
        SIZE - MARGIN,
        SIZE - MARGIN
    );
    let _ = writeln!(s, r##"<g class="points" fill="#1f5fa8" fill-opacity="0.5">"##);
    for q in &cloud.points {
        let (a, b) = proj(q);
        if a.abs() <= vp.r && b.abs() <= vp.r {
            let _ = writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="1.2"/>"#, vp.x(a), vp.y(b));
        }
    }
    let _ = writeln!(s, "</g>");
    if cone.dim() <= 2 {
        let _ = writeln!(s, r##"<g class="cone" stroke="#c0392b" stroke-width="2">"##);
        for ray in cone.rays() {
            let (a, b) = proj(ray);
            let scale = vp.r / a.abs().max(b.abs());
            let _ = writeln!(
                s,
                r#"<line x1="{ox:.3}" y1="{oy:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                vp.x(a * scale),
                vp.y(b * scale)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(bc) = boundary {
        for (name, curve) in [("boundary-1", &bc.first), ("boundary-2", &bc.second)] {
            let pts: Vec<String> = curve
                .iter()
                .filter(|q| q[0].abs() <= vp.r && q[1].abs() <= vp.r)
                .map(|q| format!("{:.3},{:.3}", vp.x(q[0]), vp.y(q[1])))
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline class="{name}" fill="none" stroke="#27ae60" stroke-width="1.5" points="{}"/>"##,
                pts.join(" ")
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
