//! SVG rendering of a graphical record.
//!
//! Time runs upward. Atoms are crosses, particles are solid vertical lines
//! while alive and dotted after death, and each atom is joined to its parent
//! (or to the left edge for a root) by a horizontal line. Sinks are drawn as
//! dashed lines from the right edge. Output depends only on the record and
//! the style.

use std::fmt::Write;

use hammersley_trees::Record64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Alternate two colours between trees, ordered by root label.
    pub color_trees: bool,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 480.0,
            margin: 40.0,
            color_trees: false,
        }
    }
}

const INK: &str = "#222222";
const TREE_COLORS: [&str; 2] = ["#c0392b", "#27ae60"];

/// Root vertex of every vertex.
fn tree_roots(rec: &Record64) -> Vec<usize> {
    let ns = rec.sources.len();
    let n = rec.vertical_segments.len();
    let mut parent = vec![None; n];
    for h in &rec.horizontal_segments {
        parent[h.child] = h.parent;
    }
    let mut root = vec![usize::MAX; n];
    // Parents are created before their children.
    for v in 0..n {
        root[v] = match parent[v] {
            Some(p) if v >= ns => root[p],
            _ => v,
        };
    }
    root
}

pub fn render_svg(rec: &Record64, style: &Style) -> String {
    let h = rec.horizon;
    let (w, ht, m) = (style.width, style.height, style.margin);
    let span_x = if h.x_hi > h.x_lo { h.x_hi - h.x_lo } else { 1.0 };
    let span_t = if h.t_max > 0.0 { h.t_max } else { 1.0 };
    let px = |x: f64| m + (x - h.x_lo) / span_x * (w - 2.0 * m);
    let py = |t: f64| ht - m - t / span_t * (ht - 2.0 * m);

    let mut colors = vec![INK; rec.vertical_segments.len()];
    if style.color_trees {
        let roots = tree_roots(rec);
        let mut ordered: Vec<usize> = roots.clone();
        ordered.sort_unstable();
        ordered.dedup();
        ordered.sort_by(|&a, &b| rec.vertical_segments[a].label.total_cmp(&rec.vertical_segments[b].label));
        for (i, &r) in ordered.iter().enumerate() {
            for v in 0..roots.len() {
                if roots[v] == r {
                    colors[v] = TREE_COLORS[i % 2];
                }
            }
        }
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{ht}" viewBox="0 0 {w} {ht}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{ht}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g class="axes" stroke="{INK}" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{m:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, ht - m, w - m, ht - m);
    let _ = writeln!(s, r#"<line x1="{m:.2}" y1="{:.2}" x2="{m:.2}" y2="{m:.2}"/>"#, ht - m);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks" font-family="sans-serif" font-size="11" fill="{INK}">"#);
    let _ = writeln!(s, r#"<text x="{m:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, ht - m + 16.0, h.x_lo);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, w - m, ht - m + 16.0, h.x_hi);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">0</text>"#, m - 6.0, ht - m + 4.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, m - 6.0, m + 4.0, h.t_max);
    let _ = writeln!(s, "</g>");

    for seg in &rec.vertical_segments {
        let c = colors[seg.vertex];
        let x = px(seg.label);
        let _ = writeln!(
            s,
            r#"<line class="alive" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{c}" stroke-width="1.5"/>"#,
            py(seg.t_birth),
            py(seg.t_end)
        );
        if seg.dead && seg.t_end < h.t_max {
            let _ = writeln!(
                s,
                r#"<line class="dead" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{c}" stroke-width="1" stroke-dasharray="2,3"/>"#,
                py(seg.t_end),
                py(h.t_max)
            );
        }
    }
    for seg in &rec.horizontal_segments {
        let c = colors[seg.child];
        let class = if seg.parent.is_some() { "link" } else { "root-link" };
        let y = py(seg.time);
        let _ = writeln!(
            s,
            r#"<line class="{class}" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{c}" stroke-width="1.5"/>"#,
            px(seg.x_from),
            px(seg.x_to)
        );
    }
    for a in &rec.atoms {
        let (x, y) = (px(a.label), py(a.time));
        let _ = writeln!(
            s,
            r#"<path class="atom" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{INK}" stroke-width="1.2"/>"#,
            x - 4.0,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0,
            y + 4.0,
            x + 4.0,
            y - 4.0
        );
    }
    for src in &rec.sources {
        let _ = writeln!(
            s,
            r#"<circle class="source" cx="{:.2}" cy="{:.2}" r="3" fill="{INK}"/>"#,
            px(src.label),
            py(0.0)
        );
    }
    for sink in &rec.sink_events {
        let y = py(sink.time);
        let to = sink.affected.map_or(w - m, |v| px(rec.vertical_segments[v].label));
        let _ = writeln!(
            s,
            r#"<line class="sink" x1="{:.2}" y1="{y:.2}" x2="{to:.2}" y2="{y:.2}" stroke="{INK}" stroke-width="1" stroke-dasharray="4,2"/>"#,
            w - m
        );
    }
    s.push_str("</svg>\n");
    s
}
