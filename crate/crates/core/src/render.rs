//! Drawings of a network and its pad placement: Graphviz DOT and a
//! self-contained SVG. Output depends only on the inputs, so repeated runs
//! are byte-identical.

use std::fmt::Write;

use crate::charge_flow::PadAssignment;
use crate::network::{NetworkInstance, NodeId};
use crate::scenario::length_label;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 480.0;
const NODE_RADIUS: f64 = 18.0;

/// Hand-placed coordinates for the eight-node example network.
const EXAMPLE_LAYOUT: [(NodeId, f64, f64); 8] = [
    (1, 60.0, 240.0),
    (2, 220.0, 90.0),
    (3, 220.0, 390.0),
    (4, 400.0, 240.0),
    (5, 560.0, 90.0),
    (6, 620.0, 300.0),
    (7, 460.0, 420.0),
    (8, 770.0, 400.0),
];

fn layout(instance: &NetworkInstance) -> Vec<(f64, f64)> {
    let mut ids = instance.nodes.clone();
    ids.sort_unstable();
    if ids == EXAMPLE_LAYOUT.map(|(id, _, _)| id) {
        return instance.nodes.iter().map(|id| EXAMPLE_LAYOUT.iter().find(|e| e.0 == *id).map(|e| (e.1, e.2)).expect("listed")).collect();
    }
    let n = instance.nodes.len().max(1) as f64;
    let (cx, cy, r) = (WIDTH / 2.0, HEIGHT / 2.0, HEIGHT / 2.0 - 50.0);
    (0..instance.nodes.len())
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n - std::f64::consts::FRAC_PI_2;
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

fn pads_on_route(assign: Option<&PadAssignment>, r: usize, sites: usize) -> Vec<(usize, usize)> {
    match assign {
        Some(a) => (0..sites).filter_map(|m| a.selected_length(r, m).map(|l| (m, l))).collect(),
        None => Vec::new(),
    }
}

/// Route weight as a label: the value when constant over the horizon,
/// otherwise its range.
fn weight_label(instance: &NetworkInstance, r: usize) -> String {
    let Ok(w) = instance.weights() else { return String::new() };
    let d = instance.dims();
    let values: Vec<f64> = (0..d.horizon).map(|t| w[d.rt(r, t)]).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        format!("w={lo}")
    } else {
        format!("w={lo}..{hi}")
    }
}

/// Graphviz digraph. Every candidate site is a box on its route's chain;
/// built sites are filled and carry their length.
pub fn to_dot(instance: &NetworkInstance, assign: Option<&PadAssignment>) -> String {
    let pos = layout(instance);
    let sites = instance.sites_per_route;
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", instance.name.replace('"', "'")).unwrap();
    out.push_str("  node [shape=circle];\n");
    for (i, id) in instance.nodes.iter().enumerate() {
        let (x, y) = pos[i];
        writeln!(out, "  n{id} [label=\"{id}\", pos=\"{:.0},{:.0}!\"];", x, HEIGHT - y).unwrap();
    }
    for (r, route) in instance.routes.iter().enumerate() {
        let built = pads_on_route(assign, r, sites);
        let mut chain = vec![format!("n{}", route.from)];
        for m in 0..sites {
            let id = format!("r{}_{}_s{}", route.from, route.to, m + 1);
            match built.iter().find(|&&(bm, _)| bm == m) {
                Some(&(_, l)) => writeln!(out, "  {id} [shape=box, style=filled, fillcolor=\"#2b7bb9\", fontcolor=white, label=\"{}\"];", length_label(l, instance.lengths)),
                None => writeln!(out, "  {id} [shape=box, label=\"\", width=0.3, height=0.2];"),
            }
            .unwrap();
            chain.push(id);
        }
        // the weight goes on the final segment only, which carries the arrowhead
        let last = chain.last().cloned().expect("origin node");
        if chain.len() > 1 {
            writeln!(out, "  {} [arrowhead=none];", chain.join(" -> ")).unwrap();
        }
        writeln!(out, "  {last} -> n{} [label=\"{}\"];", route.to, weight_label(instance, r)).unwrap();
    }
    out.push_str("}\n");
    out
}

/// SVG drawing: nodes as circles, routes as weighted arrows, candidate
/// sites as outlined rectangles and built pads filled with their length.
pub fn to_svg(instance: &NetworkInstance, assign: Option<&PadAssignment>) -> String {
    let pos = layout(instance);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#).unwrap();
    out.push_str(concat!(
        r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="7" markerHeight="7" orient="auto">"##,
        r##"<path d="M0,0 L10,5 L0,10 z" fill="#555"/></marker></defs>"##,
        "\n"
    ));
    writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##).unwrap();

    let index = |id: NodeId| instance.node_index(id).expect("validated route");
    let sites = instance.sites_per_route;
    for (r, route) in instance.routes.iter().enumerate() {
        let (x1, y1) = pos[index(route.from)];
        let (x2, y2) = pos[index(route.to)];
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len = dx.hypot(dy).max(1e-9);
        let (ux, uy) = (dx / len, dy / len);
        let (sx, sy) = (x1 + ux * NODE_RADIUS, y1 + uy * NODE_RADIUS);
        let (ex, ey) = (x2 - ux * NODE_RADIUS, y2 - uy * NODE_RADIUS);
        writeln!(out, r##"<line x1="{sx:.1}" y1="{sy:.1}" x2="{ex:.1}" y2="{ey:.1}" stroke="#555" stroke-width="2" marker-end="url(#arrow)"/>"##).unwrap();

        let angle = uy.atan2(ux).to_degrees();
        let (mx, my) = (sx + (ex - sx) * 0.5 - uy * 16.0, sy + (ey - sy) * 0.5 + ux * 16.0);
        writeln!(out, r##"<text x="{mx:.1}" y="{my:.1}" font-size="11" fill="#555" text-anchor="middle">{}</text>"##, weight_label(instance, r)).unwrap();
        let built = pads_on_route(assign, r, sites);
        for m in 0..sites {
            let f = (m + 1) as f64 / (sites + 1) as f64;
            let (cx, cy) = (sx + (ex - sx) * f, sy + (ey - sy) * f);
            let pad = built.iter().find(|&&(bm, _)| bm == m).map(|&(_, l)| l);
            let w = pad.map_or(14.0, |l| 14.0 + 8.0 * l as f64);
            let fill = if pad.is_some() { r##"fill="#2b7bb9""## } else { r##"fill="white" stroke="#2b7bb9""## };
            writeln!(
                out,
                r##"<g transform="translate({cx:.1},{cy:.1}) rotate({angle:.1})"><rect x="{:.1}" y="-8" width="{w:.1}" height="16" rx="2" {fill}/></g>"##,
                -w / 2.0
            )
            .unwrap();
            if let Some(l) = pad {
                writeln!(out, r##"<text x="{cx:.1}" y="{:.1}" font-size="11" fill="white" text-anchor="middle">{}</text>"##, cy + 4.0, length_label(l, instance.lengths)).unwrap();
            }
        }
    }
    for (i, id) in instance.nodes.iter().enumerate() {
        let (x, y) = pos[i];
        writeln!(out, r##"<circle cx="{x:.1}" cy="{y:.1}" r="{NODE_RADIUS}" fill="#f4f4f4" stroke="#222" stroke-width="2"/>"##).unwrap();
        writeln!(out, r##"<text x="{x:.1}" y="{:.1}" font-size="14" text-anchor="middle">{id}</text>"##, y + 5.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::bundled_instance;

    #[test]
    fn dot_fills_only_built_sites() {
        let inst = bundled_instance();
        let a = PadAssignment::empty(inst.dims()).with_pad(2, 1, 2);
        let dot = to_dot(&inst, Some(&a));
        assert_eq!(dot.matches("shape=box").count(), inst.routes.len() * inst.sites_per_route);
        assert_eq!(dot.matches("style=filled").count(), 1);
        assert!(dot.contains("r1_3_s2 [shape=box, style=filled, fillcolor=\"#2b7bb9\", fontcolor=white, label=\"L\"];"));
        assert!(dot.contains("n1 -> r1_3_s1 -> r1_3_s2 -> r1_3_s3 [arrowhead=none];"));
        assert!(dot.contains("r1_3_s3 -> n3 [label=\"w=7\"];"));
        assert!(!to_dot(&inst, None).contains("style=filled"));
    }

    #[test]
    fn svg_is_deterministic_and_labels_pads() {
        let inst = bundled_instance();
        let a = PadAssignment::empty(inst.dims()).with_pad(0, 0, 0).with_pad(4, 2, 1);
        let svg = to_svg(&inst, Some(&a));
        assert_eq!(svg, to_svg(&inst, Some(&a)));
        assert_eq!(svg.matches("<rect x=").count(), inst.routes.len() * inst.sites_per_route);
        assert_eq!(svg.matches(r##"rx="2" fill="#2b7bb9""##).count(), 2);
        assert!(svg.contains(">S</text>") && svg.contains(">M</text>"));
        assert_eq!(svg.matches("<circle").count(), 8);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn other_networks_fall_back_to_a_circle() {
        let inst = crate::network::tests::uniform(&[1, 2, 3], &[(1, 2), (2, 3)], 2, 3, 2);
        let svg = to_svg(&inst, None);
        assert_eq!(svg.matches("<line").count(), 2);
        assert!(!svg.contains(r##"rx="2" fill="#2b7bb9""##));
    }
}
