use std::fmt::Write as _;
use std::path::Path;

use super::{AlignedTriplet, Ellipse};
use crate::error::{Error, Result};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::parse(path, e)
}

/// `triplet_id,role,x,y`, three rows per triplet.
pub fn write_cloud_csv(path: &Path, aligned: &[AlignedTriplet]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["triplet_id", "role", "x", "y"]).map_err(|e| csv_err(path, e))?;
    for (i, t) in aligned.iter().enumerate() {
        for (role, p) in [("bona_a", t.bona_a), ("bona_b", t.bona_b), ("morph", t.morph)] {
            w.serialize((i, role, p[0], p[1])).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `W,H,S,orientation,center_x,center_y`, one row per ellipse.
pub fn write_ellipse_csv(path: &Path, ellipses: &[Ellipse]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["W", "H", "S", "orientation", "center_x", "center_y"])
        .map_err(|e| csv_err(path, e))?;
    for e in ellipses {
        w.serialize((e.width, e.height, e.size, e.orientation, e.center[0], e.center[1]))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Standalone SVG scatter of every aligned point plus the morph ellipse.
pub fn render_svg(aligned: &[AlignedTriplet], ellipse: &Ellipse, title: &str) -> String {
    const SIZE: f64 = 600.0;
    const PAD: f64 = 30.0;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut include = |p: [f64; 2]| {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    };
    for t in aligned {
        include(t.bona_a);
        include(t.bona_b);
        include(t.morph);
    }
    let reach = ellipse.width / 2.0;
    include([ellipse.center[0] - reach, ellipse.center[1] - reach]);
    include([ellipse.center[0] + reach, ellipse.center[1] + reach]);
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let scale = (SIZE - 2.0 * PAD) / span;
    let to_px = |p: [f64; 2]| [PAD + (p[0] - lo[0]) * scale, SIZE - PAD - (p[1] - lo[1]) * scale];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(title));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for t in aligned {
        for (p, color) in [(t.bona_a, "#1f77b4"), (t.bona_b, "#2ca02c"), (t.morph, "#d62728")] {
            let q = to_px(p);
            let _ = writeln!(svg, r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{color}"/>"#, q[0], q[1]);
        }
    }
    let c = to_px(ellipse.center);
    // SVG's y axis points down, so the rotation flips sign.
    let _ = writeln!(
        svg,
        r#"<ellipse cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" transform="rotate({:.6} {:.3} {:.3})" fill="none" stroke="black" stroke-width="1.5"/>"#,
        c[0],
        c[1],
        ellipse.width / 2.0 * scale,
        ellipse.height / 2.0 * scale,
        -ellipse.orientation.to_degrees(),
        c[0],
        c[1]
    );
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="14">S = {:.4}</text>"#,
        ellipse.size
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
