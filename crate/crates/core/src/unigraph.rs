//! Colored union graph of a switched structure, input reachability, and
//! maximum S-disjoint edge sets.
//!
//! A state edge `(x_k, x_j, i)` exists iff `A_i(j, k)` is nonzero; an input
//! edge `(u^i_k, x_j, i)` exists iff `B_i(j, k)` is nonzero. Colors are
//! subsystem indices (0-based in memory, 1-based when printed).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::matching::hopcroft_karp;
use crate::model::SwitchedStructure;

/// The `index`-th input of subsystem `subsystem`, written `u^i_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InputId {
    pub subsystem: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    State(usize),
    Input(InputId),
}

impl Vertex {
    pub fn state(self) -> Option<usize> {
        match self {
            Vertex::State(j) => Some(j),
            Vertex::Input(_) => None,
        }
    }

    pub fn is_input(self) -> bool {
        matches!(self, Vertex::Input(_))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::State(j) => write!(f, "x{}", j + 1),
            Vertex::Input(u) => write!(f, "u{}_{}", u.subsystem + 1, u.index + 1),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A colored edge of the union graph. Heads are always state vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColoredEdge {
    pub tail: Vertex,
    pub head: usize,
    pub color: usize,
}

impl ColoredEdge {
    pub fn new(tail: Vertex, head: usize, color: usize) -> Self {
        ColoredEdge { tail, head, color }
    }

    pub fn state(tail: usize, head: usize, color: usize) -> Self {
        ColoredEdge::new(Vertex::State(tail), head, color)
    }

    pub fn input(subsystem: usize, index: usize, head: usize) -> Self {
        ColoredEdge::new(Vertex::Input(InputId { subsystem, index }), head, subsystem)
    }
}

// Edges order by (color, tail, head).
impl Ord for ColoredEdge {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.color, self.tail, self.head).cmp(&(other.color, other.tail, other.head))
    }
}

impl PartialOrd for ColoredEdge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ColoredEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, x{}, {})", self.tail, self.head + 1, self.color + 1)
    }
}

impl Serialize for ColoredEdge {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ColoredEdge", 3)?;
        st.serialize_field("tail", &self.tail)?;
        st.serialize_field("head", &Vertex::State(self.head))?;
        st.serialize_field("color", &(self.color + 1))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredUnionGraph {
    n: usize,
    input_dims: Vec<usize>,
    edges: Vec<ColoredEdge>,
    edge_set: HashSet<ColoredEdge>,
    out_edges: BTreeMap<Vertex, Vec<usize>>,
}

impl ColoredUnionGraph {
    fn from_edges(n: usize, input_dims: Vec<usize>, mut edges: Vec<ColoredEdge>) -> Self {
        edges.sort();
        edges.dedup();
        let edge_set = edges.iter().copied().collect();
        let mut out_edges: BTreeMap<Vertex, Vec<usize>> = BTreeMap::new();
        for (idx, e) in edges.iter().enumerate() {
            out_edges.entry(e.tail).or_default().push(idx);
        }
        ColoredUnionGraph {
            n,
            input_dims,
            edges,
            edge_set,
            out_edges,
        }
    }

    /// Number of state vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of colors `N`.
    pub fn num_colors(&self) -> usize {
        self.input_dims.len()
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    /// Input vertices ordered by (subsystem, index).
    pub fn inputs(&self) -> impl Iterator<Item = InputId> + '_ {
        self.input_dims
            .iter()
            .enumerate()
            .flat_map(|(subsystem, &m)| (0..m).map(move |index| InputId { subsystem, index }))
    }

    /// All edges ordered by (color, tail, head).
    pub fn edges(&self) -> &[ColoredEdge] {
        &self.edges
    }

    pub fn state_edges(&self) -> impl Iterator<Item = &ColoredEdge> {
        self.edges.iter().filter(|e| !e.tail.is_input())
    }

    pub fn input_edges(&self) -> impl Iterator<Item = &ColoredEdge> {
        self.edges.iter().filter(|e| e.tail.is_input())
    }

    pub fn contains(&self, e: &ColoredEdge) -> bool {
        self.edge_set.contains(e)
    }

    pub fn has_vertex(&self, v: Vertex) -> bool {
        match v {
            Vertex::State(j) => j < self.n,
            Vertex::Input(u) => self
                .input_dims
                .get(u.subsystem)
                .is_some_and(|&m| u.index < m),
        }
    }

    /// Edges leaving `v`, in (color, head) order.
    pub fn out_edges(&self, v: Vertex) -> impl Iterator<Item = &ColoredEdge> {
        self.out_edges
            .get(&v)
            .into_iter()
            .flatten()
            .map(|&i| &self.edges[i])
    }

    /// Subgraph keeping only edges of one color, i.e. the subsystem digraph
    /// `G_color` on the same vertex set.
    pub fn restrict_to_color(&self, color: usize) -> ColoredUnionGraph {
        let edges = self
            .edges
            .iter()
            .filter(|e| e.color == color)
            .copied()
            .collect();
        ColoredUnionGraph::from_edges(self.n, self.input_dims.clone(), edges)
    }

    /// Subgraph keeping only the listed edges.
    pub fn restrict_to_edges(&self, keep: &[ColoredEdge]) -> ColoredUnionGraph {
        let edges = keep.iter().filter(|e| self.contains(e)).copied().collect();
        ColoredUnionGraph::from_edges(self.n, self.input_dims.clone(), edges)
    }
}

/// Builds `G_c` from the patterns of `sys`.
pub fn build_union_graph(sys: &SwitchedStructure) -> ColoredUnionGraph {
    let mut edges = Vec::with_capacity(sys.nnz());
    for (i, s) in sys.subsystems().iter().enumerate() {
        for (j, k) in s.a.iter() {
            edges.push(ColoredEdge::state(k, j, i));
        }
        for (j, k) in s.b.iter() {
            edges.push(ColoredEdge::input(i, k, j));
        }
    }
    ColoredUnionGraph::from_edges(sys.n(), sys.input_dims(), edges)
}

/// State vertices reachable from some input vertex, colors ignored.
pub fn input_reachable_set(g: &ColoredUnionGraph) -> BTreeSet<usize> {
    let mut seen = vec![false; g.n()];
    let mut queue = VecDeque::new();
    for u in g.inputs() {
        for e in g.out_edges(Vertex::Input(u)) {
            if !seen[e.head] {
                seen[e.head] = true;
                queue.push_back(e.head);
            }
        }
    }
    while let Some(x) = queue.pop_front() {
        for e in g.out_edges(Vertex::State(x)) {
            if !seen[e.head] {
                seen[e.head] = true;
                queue.push_back(e.head);
            }
        }
    }
    (0..g.n()).filter(|&j| seen[j]).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SDisjointViolation {
    #[error("two edges share head {}", Vertex::State(*.0))]
    SharedHead(usize),
    #[error("two edges leave {tail} with the same color {}", .color + 1)]
    SameTailSameColor { tail: Vertex, color: usize },
}

/// Checks the two S-disjointness conditions: distinct heads, and distinct
/// colors among edges that share a tail.
pub fn check_s_disjoint(edges: &[ColoredEdge]) -> Result<(), SDisjointViolation> {
    let mut heads = HashSet::new();
    let mut tails = HashSet::new();
    for e in edges {
        if !heads.insert(e.head) {
            return Err(SDisjointViolation::SharedHead(e.head));
        }
        if !tails.insert((e.tail, e.color)) {
            return Err(SDisjointViolation::SameTailSameColor {
                tail: e.tail,
                color: e.color,
            });
        }
    }
    Ok(())
}

/// An S-disjoint edge set of `G_c`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SDisjointSet {
    edges: Vec<ColoredEdge>,
}

impl SDisjointSet {
    /// Validates and wraps `edges`.
    pub fn new(mut edges: Vec<ColoredEdge>) -> Result<Self, SDisjointViolation> {
        check_s_disjoint(&edges)?;
        edges.sort();
        Ok(SDisjointSet { edges })
    }

    pub fn edges(&self) -> &[ColoredEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn heads(&self) -> BTreeSet<usize> {
        self.edges.iter().map(|e| e.head).collect()
    }
}

/// Maximum S-disjoint edge set whose heads lie in `allowed_heads`.
///
/// Solved as a bipartite matching: each left vertex is either an input
/// vertex or a (state tail, color) pair, each right vertex an allowed head.
/// Same-tail same-color edges share a left vertex and therefore compete.
pub fn max_s_disjoint(g: &ColoredUnionGraph, allowed_heads: &BTreeSet<usize>) -> SDisjointSet {
    // Left vertices keyed by (color, tail) so augmenting search order is
    // (color, tail, head) lexicographic.
    let mut left: BTreeMap<(usize, Vertex), Vec<usize>> = BTreeMap::new();
    for e in g.edges() {
        if allowed_heads.contains(&e.head) {
            left.entry((e.color, e.tail)).or_default().push(e.head);
        }
    }
    let keys: Vec<(usize, Vertex)> = left.keys().copied().collect();
    let adj: Vec<Vec<usize>> = left
        .into_values()
        .map(|mut heads| {
            heads.sort_unstable();
            heads
        })
        .collect();
    let m = hopcroft_karp(&adj, g.n());
    let edges = m
        .pairs()
        .map(|(l, head)| {
            let (color, tail) = keys[l];
            ColoredEdge { tail, head, color }
        })
        .collect();
    SDisjointSet::new(edges).expect("matching yields S-disjoint edges")
}

/// Generic rank of `[A_1, .., A_N, B_1, .., B_N]`, via the maximum
/// S-disjoint edge set.
pub fn grank_concat(sys: &SwitchedStructure) -> usize {
    let g = build_union_graph(sys);
    let all: BTreeSet<usize> = (0..g.n()).collect();
    max_s_disjoint(&g, &all).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn all(n: usize) -> BTreeSet<usize> {
        (0..n).collect()
    }

    #[test]
    fn three_state_system_graph() {
        let g = build_union_graph(&fixtures::three_state());
        let states: Vec<_> = g.state_edges().copied().collect();
        assert_eq!(
            states,
            vec![ColoredEdge::state(0, 1, 0), ColoredEdge::state(0, 2, 1)]
        );
        let inputs: Vec<_> = g.input_edges().copied().collect();
        assert_eq!(inputs, vec![ColoredEdge::input(0, 0, 0)]);
        assert_eq!(g.inputs().count(), 2);
    }

    #[test]
    fn boost_converter_graph() {
        let g = build_union_graph(&fixtures::boost_converter());
        let states: BTreeSet<_> = g.state_edges().copied().collect();
        let expected: BTreeSet<_> = [
            ColoredEdge::state(0, 0, 0),
            ColoredEdge::state(1, 0, 0),
            ColoredEdge::state(0, 1, 0),
            ColoredEdge::state(0, 0, 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(states, expected);
        let inputs: BTreeSet<_> = g.input_edges().copied().collect();
        let expected: BTreeSet<_> = [ColoredEdge::input(0, 0, 1), ColoredEdge::input(1, 0, 1)]
            .into_iter()
            .collect();
        assert_eq!(inputs, expected);
    }

    #[test]
    fn all_zero_patterns_give_isolated_vertices() {
        let sys = SwitchedStructure::from_patterns(3, &[(&[], 1, &[]), (&[], 0, &[])]).unwrap();
        let g = build_union_graph(&sys);
        assert_eq!(g.n(), 3);
        assert!(g.edges().is_empty());
        assert!(input_reachable_set(&g).is_empty());
        assert!(max_s_disjoint(&g, &all(3)).is_empty());
        assert_eq!(grank_concat(&sys), 0);
    }

    #[test]
    fn reachability() {
        let g = build_union_graph(&fixtures::three_state());
        assert_eq!(input_reachable_set(&g), all(3));
        let g = build_union_graph(&fixtures::boost_converter());
        assert_eq!(input_reachable_set(&g), all(2));
    }

    #[test]
    fn s_disjoint_sizes() {
        let g = build_union_graph(&fixtures::three_state());
        let sd = max_s_disjoint(&g, &all(3));
        assert_eq!(sd.len(), 3);
        assert_eq!(
            sd.edges(),
            &[
                ColoredEdge::state(0, 1, 0),
                ColoredEdge::input(0, 0, 0),
                ColoredEdge::state(0, 2, 1)
            ]
        );
        assert_eq!(grank_concat(&fixtures::three_state()), 3);
        assert_eq!(grank_concat(&fixtures::boost_converter()), 2);
    }

    #[test]
    fn allowed_heads_restrict_result() {
        let g = build_union_graph(&fixtures::three_state());
        let sd = max_s_disjoint(&g, &[1, 2].into_iter().collect());
        assert_eq!(sd.heads(), [1, 2].into_iter().collect());
    }

    #[test]
    fn s_disjoint_violations() {
        let bad = [ColoredEdge::state(0, 1, 0), ColoredEdge::state(0, 2, 0)];
        assert_eq!(
            check_s_disjoint(&bad),
            Err(SDisjointViolation::SameTailSameColor {
                tail: Vertex::State(0),
                color: 0
            })
        );
        let bad = [ColoredEdge::state(0, 1, 0), ColoredEdge::state(2, 1, 1)];
        assert_eq!(check_s_disjoint(&bad), Err(SDisjointViolation::SharedHead(1)));
    }

    #[test]
    fn color_restriction() {
        let g = build_union_graph(&fixtures::three_state());
        let g1 = g.restrict_to_color(0);
        assert_eq!(g1.edges().len(), 2);
        assert_eq!(input_reachable_set(&g1), [0, 1].into_iter().collect());
        let g2 = g.restrict_to_color(1);
        assert!(input_reachable_set(&g2).is_empty());
    }
}
