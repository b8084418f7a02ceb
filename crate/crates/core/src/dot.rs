//! Graphviz DOT export.
//!
//! Edge color `c` (1-based) is drawn solid, dashed or dotted for `c` = 1, 2,
//! 3; from 4 on the styles repeat and the edge carries its color number as a
//! label. Input vertices are boxes, states are circles.

use std::fmt::Write;

use crate::cactus::CactusConfiguration;
use crate::mdg::{Linking, MdgVertex, MultiLayerDynamicGraph};
use crate::unigraph::{ColoredEdge, ColoredUnionGraph, Vertex};

const STYLES: [&str; 3] = ["solid", "dashed", "dotted"];

fn color_attrs(color: usize) -> String {
    let style = STYLES[color % STYLES.len()];
    if color >= STYLES.len() {
        format!("style={style}, label=\"{}\"", color + 1)
    } else {
        format!("style={style}")
    }
}

fn vertex_nodes(out: &mut String, g: &ColoredUnionGraph) {
    for j in 0..g.n() {
        let _ = writeln!(out, "  \"{}\" [shape=circle];", Vertex::State(j));
    }
    for u in g.inputs() {
        let _ = writeln!(out, "  \"{}\" [shape=box];", Vertex::Input(u));
    }
}

fn edge_line(out: &mut String, e: &ColoredEdge, extra: &str) {
    let _ = writeln!(
        out,
        "  \"{}\" -> \"{}\" [{}{}];",
        e.tail,
        Vertex::State(e.head),
        color_attrs(e.color),
        extra
    );
}

/// The colored union graph.
pub fn union_graph_dot(g: &ColoredUnionGraph) -> String {
    let mut out = String::from("digraph Gc {\n");
    vertex_nodes(&mut out, g);
    for e in g.edges() {
        edge_line(&mut out, e, "");
    }
    out.push_str("}\n");
    out
}

/// A cactus configuration over its graph: stem edges red, bud edges blue,
/// `dropped` edges gray.
pub fn cactus_dot(g: &ColoredUnionGraph, config: &CactusConfiguration, dropped: &[ColoredEdge]) -> String {
    let mut out = String::from("digraph cactus {\n");
    vertex_nodes(&mut out, g);
    for s in &config.stems {
        for e in &s.edges {
            edge_line(&mut out, e, ", color=red");
        }
    }
    for b in &config.buds {
        for e in &b.edges {
            edge_line(&mut out, e, ", color=blue");
        }
    }
    for e in dropped {
        edge_line(&mut out, e, ", color=gray");
    }
    out.push_str("}\n");
    out
}

/// The MDG with one rank per layer, top layer first. Edges of `linking`
/// are drawn bold.
pub fn mdg_dot(mdg: &MultiLayerDynamicGraph, linking: Option<&Linking>) -> String {
    let mut bold = std::collections::HashSet::new();
    if let Some(l) = linking {
        for p in &l.paths {
            for w in p.windows(2) {
                bold.insert((w[0], w[1]));
            }
        }
    }
    let mut out = String::from("digraph mdg {\n  rankdir=TB;\n");
    for layer in (0..=mdg.layers()).rev() {
        let _ = writeln!(out, "  subgraph layer{layer} {{\n    rank=same;");
        for (id, v) in mdg.vertices().iter().enumerate() {
            if v.layer() == layer {
                let shape = if v.is_input() { "box" } else { "circle" };
                let _ = writeln!(out, "    n{id} [label=\"{v}\", shape={shape}];");
            }
        }
        out.push_str("  }\n");
    }
    for e in mdg.edges() {
        let color = match mdg.vertex(e.from) {
            MdgVertex::State { block: Some(b), .. } => b.subsystem,
            _ => e.weight.subsystem,
        };
        let extra = if bold.contains(&(e.from, e.to)) { ", penwidth=3" } else { "" };
        let _ = writeln!(out, "  n{} -> n{} [{}{}];", e.from, e.to, color_attrs(color), extra);
    }
    out.push_str("}\n");
    out
}
