//! SVG output: Voronoi percolation pictures and threshold curves.

use std::fmt::Write as _;
use vorperc_core::geometry::TorusDomain;
use vorperc_core::{DelaunayComplex, PointConfiguration, SweepResult};

const PIXELS: f64 = 800.0;
const RED: &str = "#c0392b";
const WHITE: &str = "#f4f1ea";

/// Voronoi cells of a d = 2 configuration, red where the mark is at most
/// `p`. Cells crossing the boundary are drawn with their periodic copies and
/// clipped to the square.
pub fn percolation_svg(config: &PointConfiguration, k: Option<&DelaunayComplex>, p: f64) -> String {
    let side = config.domain().side();
    let scale = PIXELS / side;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PIXELS}" height="{PIXELS}" viewBox="0 0 {PIXELS} {PIXELS}">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="torus"><rect x="0" y="0" width="{PIXELS}" height="{PIXELS}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{PIXELS}" height="{PIXELS}" fill="{WHITE}" stroke="black" stroke-width="1"/>"#
    );
    if let Some(k) = k {
        let _ = writeln!(s, r##"<g clip-path="url(#torus)" stroke="#555" stroke-width="0.4">"##);
        for (v, cell) in voronoi_cells(config, k).into_iter().enumerate() {
            let fill = if config.is_red(v, p) { RED } else { WHITE };
            let x = config.points()[v];
            for (dx, dy) in shifts(&cell, &x, side) {
                let pts: Vec<String> = cell
                    .iter()
                    .map(|c| format!("{:.2},{:.2}", (c[0] + dx) * scale, PIXELS - (c[1] + dy) * scale))
                    .collect();
                let _ = writeln!(s, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
            }
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

/// Cell polygons in absolute coordinates around each point, corners sorted
/// by angle.
fn voronoi_cells(config: &PointConfiguration, k: &DelaunayComplex) -> Vec<Vec<[f64; 2]>> {
    let dom: &TorusDomain = config.domain();
    let pts = config.points();
    let mut corners: Vec<Vec<[f64; 2]>> = vec![Vec::new(); pts.len()];
    for (t, tri) in k.simplices(2).iter().enumerate() {
        let c = k.circumdata()[t].center;
        for &v in tri {
            let x = pts[v as usize];
            let off = dom.displacement(&x, &c);
            corners[v as usize].push([x[0] + off[0], x[1] + off[1]]);
        }
    }
    for (v, cell) in corners.iter_mut().enumerate() {
        let x = pts[v];
        cell.sort_by(|a, b| {
            let ta = (a[1] - x[1]).atan2(a[0] - x[0]);
            let tb = (b[1] - x[1]).atan2(b[0] - x[0]);
            ta.total_cmp(&tb)
        });
    }
    corners
}

/// Translates by multiples of `side` under which the cell meets the square.
fn shifts(cell: &[[f64; 2]], x: &vorperc_core::Coords, side: f64) -> Vec<(f64, f64)> {
    let (mut lo, mut hi) = ([x[0], x[1]], [x[0], x[1]]);
    for c in cell {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let mut out = Vec::new();
    for a in -1..=1 {
        for b in -1..=1 {
            let (dx, dy) = (a as f64 * side, b as f64 * side);
            if hi[0] + dx > 0.0 && lo[0] + dx < side && hi[1] + dy > 0.0 && lo[1] + dy < side {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Empirical P(A) (solid) and P(S) (dashed) against p, one colour per size.
pub fn curves_svg(result: &SweepResult) -> String {
    let (w, h, m) = (720.0, 480.0, 60.0);
    let grid = &result.config.p_grid;
    let (p_lo, p_hi) = (grid[0], *grid.last().unwrap());
    let span = if p_hi > p_lo { p_hi - p_lo } else { 1.0 };
    let px = |p: f64| m + (p - p_lo) / span * (w - 2.0 * m);
    let py = |y: f64| h - m - y * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m},{} L{m},{} L{},{}" fill="none" stroke="black"/>"#,
        m,
        h - m,
        w - m,
        h - m
    );
    for t in 0..=4 {
        let y = t as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{y:.2}</text>"#,
            m - 6.0,
            py(y) + 4.0
        );
        let p = p_lo + span * t as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{p:.2}</text>"#,
            px(p),
            h - m + 18.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">p</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(
        s,
        r##"<line x1="{m}" y1="{0}" x2="{1}" y2="{0}" stroke="#bbb" stroke-dasharray="2,3"/>"##,
        py(0.5),
        w - m
    );
    let n = result.config.sizes.len();
    for (idx, &side) in result.config.sizes.iter().enumerate() {
        let hue = if n > 1 { 240.0 * idx as f64 / (n - 1) as f64 } else { 0.0 };
        let colour = format!("hsl({hue:.0},70%,40%)");
        let rows = result.rows_for(side);
        for (dash, f) in [("", 0usize), (r#" stroke-dasharray="6,4""#, 1)] {
            let path: Vec<String> = rows
                .iter()
                .map(|r| {
                    let y = if f == 0 { r.p_a() } else { r.p_s() };
                    format!("{:.2},{:.2}", px(r.p), py(y))
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.8"{dash}/>"#,
                path.join(" ")
            );
        }
        let ly = m + 16.0 * idx as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{colour}">L = {side}</text>"#,
            w - m - 70.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{}">solid: P(A), dashed: P(S), d = {}, i = {}</text>"#,
        m - 20.0,
        result.config.d,
        result.config.i
    );
    s.push_str("</svg>\n");
    s
}
