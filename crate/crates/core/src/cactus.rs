//! Generalized stems, buds and cactus configurations, and generalized
//! cactus walkings.
//!
//! A generalized stem is an input-rooted tree of S-disjoint colored edges in
//! which every state has exactly one ingoing edge. A generalized bud is an
//! input-free component with exactly one cycle, in-degree one everywhere and
//! every vertex input-reachable. Vertex-disjoint stems and buds form a
//! cactus configuration; its covered states lower-bound the generic
//! controllable-subspace dimension.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::mdg::{walk_mdg_path, MdgVertex};
use crate::unigraph::{
    check_s_disjoint, input_reachable_set, max_s_disjoint, ColoredEdge, ColoredUnionGraph, InputId,
    SDisjointSet, SDisjointViolation, Vertex,
};

/// Default cap on the walk length handled by [`verify_cactus_walking`].
pub const DEFAULT_WALK_LIMIT: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("a walk needs at least one state")]
    Empty,
    #[error("{colors} colors for {states} steps")]
    ColorCount { states: usize, colors: usize },
    #[error("first edge leaves input {input} but has color {}", .color + 1)]
    InputColor { input: Vertex, color: usize },
    #[error("step {step} uses edge {edge}, which is not in the graph")]
    MissingEdge { step: usize, edge: ColoredEdge },
}

/// Walk `u -> x_{s_1} -> .. -> x_{s_k}` with one color per edge; its length
/// is the number of edges `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputStateWalk {
    input: InputId,
    states: Vec<usize>,
    colors: Vec<usize>,
}

impl InputStateWalk {
    pub fn new(input: InputId, states: Vec<usize>, colors: Vec<usize>) -> Result<Self, WalkError> {
        if states.is_empty() {
            return Err(WalkError::Empty);
        }
        if colors.len() != states.len() {
            return Err(WalkError::ColorCount {
                states: states.len(),
                colors: colors.len(),
            });
        }
        if colors[0] != input.subsystem {
            return Err(WalkError::InputColor {
                input: Vertex::Input(input),
                color: colors[0],
            });
        }
        Ok(InputStateWalk { input, states, colors })
    }

    /// Builds a walk from consecutive colored edges, first edge input-tailed.
    pub fn from_edges(edges: &[ColoredEdge]) -> Result<Self, WalkError> {
        let Some(first) = edges.first() else {
            return Err(WalkError::Empty);
        };
        let Vertex::Input(input) = first.tail else {
            return Err(WalkError::MissingEdge { step: 0, edge: *first });
        };
        for (step, pair) in edges.windows(2).enumerate() {
            if pair[1].tail != Vertex::State(pair[0].head) {
                return Err(WalkError::MissingEdge {
                    step: step + 1,
                    edge: pair[1],
                });
            }
        }
        InputStateWalk::new(
            input,
            edges.iter().map(|e| e.head).collect(),
            edges.iter().map(|e| e.color).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn input(&self) -> InputId {
        self.input
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn head(&self) -> usize {
        *self.states.last().unwrap()
    }

    pub fn edges(&self) -> Vec<ColoredEdge> {
        let mut tail = Vertex::Input(self.input);
        self.states
            .iter()
            .zip(&self.colors)
            .map(|(&head, &color)| {
                let e = ColoredEdge::new(tail, head, color);
                tail = Vertex::State(head);
                e
            })
            .collect()
    }

    pub fn check_in(&self, g: &ColoredUnionGraph) -> Result<(), WalkError> {
        for (step, edge) in self.edges().into_iter().enumerate() {
            if !g.contains(&edge) {
                return Err(WalkError::MissingEdge { step, edge });
            }
        }
        Ok(())
    }
}

impl Serialize for InputStateWalk {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("InputStateWalk", 3)?;
        st.serialize_field("input", &Vertex::Input(self.input))?;
        let states: Vec<Vertex> = self.states.iter().map(|&j| Vertex::State(j)).collect();
        st.serialize_field("states", &states)?;
        let colors: Vec<usize> = self.colors.iter().map(|c| c + 1).collect();
        st.serialize_field("colors", &colors)?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("edge {0} is not in the graph")]
    EdgeNotInGraph(ColoredEdge),
    #[error("expected exactly one input vertex, found {0}")]
    InputCount(usize),
    #[error("stem root {0} is not the tail of any edge")]
    RootMismatch(Vertex),
    #[error("stem contains a cycle")]
    HasCycle,
    #[error("bud contains input vertex {0}")]
    HasInput(Vertex),
    #[error("expected exactly one cycle, found {0}")]
    CycleCount(usize),
    #[error("{vertex} has {count} ingoing edges")]
    InDegree { vertex: Vertex, count: usize },
    #[error("{edges} edges on {vertices} vertices")]
    EdgeCount { edges: usize, vertices: usize },
    #[error("edges are not S-disjoint: {0}")]
    SDisjoint(SDisjointViolation),
    #[error("{0} is not input-reachable")]
    Unreachable(Vertex),
    #[error("{0} appears in two parts of the configuration")]
    Overlap(Vertex),
    #[error("recorded cycle does not match the edges")]
    CycleMismatch,
    #[error("recorded covered set does not match the stems and buds")]
    CoveredMismatch,
}

fn edge_vertices(edges: &[ColoredEdge]) -> BTreeSet<Vertex> {
    edges
        .iter()
        .flat_map(|e| [e.tail, Vertex::State(e.head)])
        .collect()
}

fn in_degree_violations(edges: &[ColoredEdge], vertices: &BTreeSet<Vertex>) -> Vec<Violation> {
    let mut indeg: BTreeMap<usize, usize> = BTreeMap::new();
    for e in edges {
        *indeg.entry(e.head).or_default() += 1;
    }
    vertices
        .iter()
        .filter_map(|&v| {
            let j = v.state()?;
            let count = indeg.get(&j).copied().unwrap_or(0);
            (count != 1).then_some(Violation::InDegree { vertex: v, count })
        })
        .collect()
}

/// Number of directed cycles among state edges, assuming in-degree at most
/// one (each state then lies on at most one cycle). Falls back to "at least
/// one" detection otherwise.
fn count_cycles(edges: &[ColoredEdge]) -> usize {
    let mut parent: HashMap<usize, usize> = HashMap::new();
    for e in edges {
        if let Vertex::State(t) = e.tail {
            parent.entry(e.head).or_insert(t);
        }
    }
    let mut state: HashMap<usize, u8> = HashMap::new();
    let mut cycles = 0;
    let mut starts: Vec<usize> = parent.keys().copied().collect();
    starts.sort_unstable();
    for start in starts {
        let mut trail = Vec::new();
        let mut cur = start;
        loop {
            match state.get(&cur) {
                Some(1) => {
                    cycles += 1;
                    break;
                }
                Some(_) => break,
                None => {}
            }
            state.insert(cur, 1);
            trail.push(cur);
            match parent.get(&cur) {
                Some(&p) => cur = p,
                None => break,
            }
        }
        for v in trail {
            state.insert(v, 2);
        }
    }
    cycles
}

fn has_directed_cycle(edges: &[ColoredEdge]) -> bool {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut indeg: BTreeMap<usize, usize> = BTreeMap::new();
    let mut nodes = BTreeSet::new();
    for e in edges {
        if let Vertex::State(t) = e.tail {
            adj.entry(t).or_default().push(e.head);
            *indeg.entry(e.head).or_default() += 1;
            nodes.insert(t);
            nodes.insert(e.head);
        }
    }
    let mut queue: VecDeque<usize> = nodes
        .iter()
        .copied()
        .filter(|v| !indeg.contains_key(v))
        .collect();
    let mut removed = 0;
    while let Some(v) = queue.pop_front() {
        removed += 1;
        for &w in adj.get(&v).into_iter().flatten() {
            let d = indeg.get_mut(&w).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push_back(w);
            }
        }
    }
    removed < nodes.len()
}

fn membership_violations(edges: &[ColoredEdge], g: &ColoredUnionGraph) -> Vec<Violation> {
    edges
        .iter()
        .filter(|e| !g.contains(e))
        .map(|&e| Violation::EdgeNotInGraph(e))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedStem {
    pub root: InputId,
    pub edges: Vec<ColoredEdge>,
}

impl GeneralizedStem {
    /// State vertices of the stem.
    pub fn vertices(&self) -> BTreeSet<usize> {
        self.edges.iter().map(|e| e.head).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralizedBud {
    pub edges: Vec<ColoredEdge>,
    /// Cycle vertices in edge order, starting from the smallest index.
    pub cycle: Vec<usize>,
}

impl GeneralizedBud {
    /// Wraps `edges` and derives the cycle. Returns `None` when the edges
    /// contain no state cycle.
    pub fn from_edges(mut edges: Vec<ColoredEdge>) -> Option<Self> {
        edges.sort();
        let cycle = find_cycle(&edges)?;
        Some(GeneralizedBud { edges, cycle })
    }

    pub fn vertices(&self) -> BTreeSet<usize> {
        self.edges.iter().map(|e| e.head).collect()
    }

    /// Edge of the cycle entering `head`.
    fn cycle_edge_into(&self, head: usize) -> Option<ColoredEdge> {
        let pos = self.cycle.iter().position(|&v| v == head)?;
        let prev = self.cycle[(pos + self.cycle.len() - 1) % self.cycle.len()];
        self.edges
            .iter()
            .find(|e| e.head == head && e.tail == Vertex::State(prev))
            .copied()
    }
}

fn find_cycle(edges: &[ColoredEdge]) -> Option<Vec<usize>> {
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    for e in edges {
        if let Vertex::State(t) = e.tail {
            parent.entry(e.head).or_insert(t);
        }
    }
    for &start in parent.keys() {
        let mut seen = Vec::new();
        let mut cur = start;
        while let Some(&p) = parent.get(&cur) {
            if let Some(pos) = seen.iter().position(|&v| v == cur) {
                // seen[pos..] lists the cycle against edge direction.
                let mut cycle: Vec<usize> = seen[pos..].iter().rev().copied().collect();
                let min = cycle.iter().enumerate().min_by_key(|(_, v)| **v).unwrap().0;
                cycle.rotate_left(min);
                return Some(cycle);
            }
            seen.push(cur);
            cur = p;
        }
    }
    None
}

/// Checks the stem conditions and returns every violated one.
pub fn validate_stem(s: &GeneralizedStem, g: &ColoredUnionGraph) -> Result<(), Vec<Violation>> {
    let mut out = membership_violations(&s.edges, g);
    let vertices = edge_vertices(&s.edges);
    let inputs: Vec<Vertex> = vertices.iter().copied().filter(|v| v.is_input()).collect();
    if inputs.len() != 1 {
        out.push(Violation::InputCount(inputs.len()));
    }
    if !vertices.contains(&Vertex::Input(s.root)) {
        out.push(Violation::RootMismatch(Vertex::Input(s.root)));
    }
    if has_directed_cycle(&s.edges) {
        out.push(Violation::HasCycle);
    }
    out.extend(in_degree_violations(&s.edges, &vertices));
    if s.edges.len() + 1 != vertices.len() {
        out.push(Violation::EdgeCount {
            edges: s.edges.len(),
            vertices: vertices.len(),
        });
    }
    if let Err(v) = check_s_disjoint(&s.edges) {
        out.push(Violation::SDisjoint(v));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Checks the bud conditions against `reachable` (input-reachable states of
/// the full colored union graph) and returns every violated one.
pub fn validate_bud(
    b: &GeneralizedBud,
    g: &ColoredUnionGraph,
    reachable: &BTreeSet<usize>,
) -> Result<(), Vec<Violation>> {
    let mut out = membership_violations(&b.edges, g);
    let vertices = edge_vertices(&b.edges);
    out.extend(
        vertices
            .iter()
            .filter(|v| v.is_input())
            .map(|&v| Violation::HasInput(v)),
    );
    let cycles = count_cycles(&b.edges);
    if cycles != 1 {
        out.push(Violation::CycleCount(cycles));
    } else if find_cycle(&b.edges).as_ref() != Some(&b.cycle) {
        out.push(Violation::CycleMismatch);
    }
    out.extend(in_degree_violations(&b.edges, &vertices));
    if b.edges.len() != vertices.len() {
        out.push(Violation::EdgeCount {
            edges: b.edges.len(),
            vertices: vertices.len(),
        });
    }
    if let Err(v) = check_s_disjoint(&b.edges) {
        out.push(Violation::SDisjoint(v));
    }
    out.extend(
        vertices
            .iter()
            .filter(|v| v.state().is_some_and(|j| !reachable.contains(&j)))
            .map(|&v| Violation::Unreachable(v)),
    );
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CactusConfiguration {
    pub stems: Vec<GeneralizedStem>,
    pub buds: Vec<GeneralizedBud>,
    pub covered: BTreeSet<usize>,
}

impl CactusConfiguration {
    pub fn new(stems: Vec<GeneralizedStem>, buds: Vec<GeneralizedBud>) -> Self {
        let covered = stems
            .iter()
            .flat_map(|s| s.vertices())
            .chain(buds.iter().flat_map(|b| b.vertices()))
            .collect();
        CactusConfiguration { stems, buds, covered }
    }

    pub fn size(&self) -> usize {
        self.covered.len()
    }

    pub fn edges(&self) -> Vec<ColoredEdge> {
        let mut out: Vec<ColoredEdge> = self
            .stems
            .iter()
            .flat_map(|s| s.edges.iter().copied())
            .chain(self.buds.iter().flat_map(|b| b.edges.iter().copied()))
            .collect();
        out.sort();
        out
    }

    /// Validates every stem and bud, pairwise vertex-disjointness and the
    /// covered set.
    pub fn validate(&self, g: &ColoredUnionGraph, reachable: &BTreeSet<usize>) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let mut seen: HashSet<Vertex> = HashSet::new();
        let mut covered = BTreeSet::new();
        for s in &self.stems {
            if let Err(v) = validate_stem(s, g) {
                out.extend(v);
            }
            for v in edge_vertices(&s.edges) {
                if !seen.insert(v) {
                    out.push(Violation::Overlap(v));
                }
            }
            covered.extend(s.vertices());
        }
        for b in &self.buds {
            if let Err(v) = validate_bud(b, g, reachable) {
                out.extend(v);
            }
            for v in edge_vertices(&b.edges) {
                if !seen.insert(v) {
                    out.push(Violation::Overlap(v));
                }
            }
            covered.extend(b.vertices());
        }
        if covered != self.covered {
            out.push(Violation::CoveredMismatch);
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn certificate(&self) -> CactusCertificate {
        CactusCertificate {
            covered: self.covered.iter().map(|&j| Vertex::State(j)).collect(),
            size: self.size(),
            stems: self
                .stems
                .iter()
                .map(|s| StemCertificate {
                    root: Vertex::Input(s.root),
                    edges: s.edges.clone(),
                })
                .collect(),
            buds: self
                .buds
                .iter()
                .map(|b| BudCertificate {
                    cycle: b.cycle.iter().map(|&j| Vertex::State(j)).collect(),
                    edges: b.edges.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CactusCertificate {
    pub size: usize,
    pub covered: Vec<Vertex>,
    pub stems: Vec<StemCertificate>,
    pub buds: Vec<BudCertificate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StemCertificate {
    pub root: Vertex,
    pub edges: Vec<ColoredEdge>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudCertificate {
    pub cycle: Vec<Vertex>,
    pub edges: Vec<ColoredEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub config: CactusConfiguration,
    pub dropped: Vec<ColoredEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CactusError {
    #[error("edge {0} is not in the graph")]
    EdgeNotInGraph(ColoredEdge),
}

/// Splits an S-disjoint edge set into input-rooted stems and reachable
/// unicyclic buds; every other component is dropped.
pub fn decompose(
    sd: &SDisjointSet,
    g: &ColoredUnionGraph,
    reachable: &BTreeSet<usize>,
) -> Result<Decomposition, CactusError> {
    if let Some(e) = sd.edges().iter().find(|e| !g.contains(e)) {
        return Err(CactusError::EdgeNotInGraph(*e));
    }
    // Weak components by union-find over the edge endpoints.
    let vertices: Vec<Vertex> = edge_vertices(sd.edges()).into_iter().collect();
    let index: HashMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf: Vec<usize> = (0..vertices.len()).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for e in sd.edges() {
        let a = find(&mut uf, index[&e.tail]);
        let b = find(&mut uf, index[&Vertex::State(e.head)]);
        uf[a.max(b)] = a.min(b);
    }
    let mut components: BTreeMap<usize, Vec<ColoredEdge>> = BTreeMap::new();
    for e in sd.edges() {
        let root = find(&mut uf, index[&e.tail]);
        components.entry(root).or_default().push(*e);
    }

    let mut stems = Vec::new();
    let mut buds = Vec::new();
    let mut dropped = Vec::new();
    for edges in components.into_values() {
        let root = edges.iter().find_map(|e| match e.tail {
            Vertex::Input(u) => Some(u),
            Vertex::State(_) => None,
        });
        match root {
            Some(root) => {
                let stem = GeneralizedStem { root, edges };
                if validate_stem(&stem, g).is_ok() {
                    stems.push(stem);
                } else {
                    dropped.extend(stem.edges);
                }
            }
            None => match GeneralizedBud::from_edges(edges.clone()) {
                Some(bud) if validate_bud(&bud, g, reachable).is_ok() => buds.push(bud),
                _ => dropped.extend(edges),
            },
        }
    }
    dropped.sort();
    Ok(Decomposition {
        config: CactusConfiguration::new(stems, buds),
        dropped,
    })
}

/// The drop-and-retry loop: match heads inside `allowed`, decompose, and
/// shrink `allowed` by the heads of dropped edges until nothing is dropped.
fn cover_by_dropping(g: &ColoredUnionGraph, reachable: &BTreeSet<usize>) -> CactusConfiguration {
    let mut allowed = reachable.clone();
    loop {
        let sd = max_s_disjoint(g, &allowed);
        let d = decompose(&sd, g, reachable).expect("matched edges belong to the graph");
        if d.dropped.is_empty() {
            return d.config;
        }
        for e in &d.dropped {
            allowed.remove(&e.head);
        }
    }
}

/// Variant that also restricts tails to `allowed` and removes only the
/// states left without an ingoing edge. At the fixpoint every allowed state
/// has a parent in `allowed` or an input, so nothing is dropped.
fn cover_by_pruning(g: &ColoredUnionGraph, reachable: &BTreeSet<usize>) -> CactusConfiguration {
    let mut allowed = reachable.clone();
    loop {
        let keep: Vec<ColoredEdge> = g
            .edges()
            .iter()
            .filter(|e| match e.tail {
                Vertex::Input(_) => true,
                Vertex::State(t) => allowed.contains(&t),
            })
            .copied()
            .collect();
        let sub = g.restrict_to_edges(&keep);
        let sd = max_s_disjoint(&sub, &allowed);
        let heads = sd.heads();
        if heads == allowed {
            let d = decompose(&sd, g, reachable).expect("matched edges belong to the graph");
            debug_assert!(d.dropped.is_empty());
            return d.config;
        }
        allowed = heads;
    }
}

fn best_of(candidates: impl IntoIterator<Item = CactusConfiguration>) -> CactusConfiguration {
    let mut best = CactusConfiguration::default();
    for c in candidates {
        if c.size() > best.size() {
            best = c;
        }
    }
    best
}

fn single_color_covers(g: &ColoredUnionGraph) -> Vec<CactusConfiguration> {
    let mut out = Vec::new();
    for color in 0..g.num_colors() {
        let gi = g.restrict_to_color(color);
        let reach_i = input_reachable_set(&gi);
        out.push(cover_by_dropping(&gi, &reach_i));
        out.push(cover_by_pruning(&gi, &reach_i));
    }
    out
}

/// Heuristically maximal cactus configuration of `g`.
///
/// Candidates are the drop-and-retry loop on `g`, a pruning variant of it,
/// and both loops on every single-color subgraph; the largest wins, ties
/// going to the earliest. Maximality is not guaranteed, validity is.
pub fn best_cactus_cover(g: &ColoredUnionGraph) -> CactusConfiguration {
    let reachable = input_reachable_set(g);
    let mut candidates = vec![cover_by_dropping(g, &reachable), cover_by_pruning(g, &reachable)];
    candidates.extend(single_color_covers(g));
    best_of(candidates)
}

/// [`best_cactus_cover`] together with the edges of the first maximum
/// S-disjoint set over the reachable states that the cover does not use.
pub fn best_cactus_decomposition(g: &ColoredUnionGraph) -> Decomposition {
    let config = best_cactus_cover(g);
    let used: HashSet<ColoredEdge> = config.edges().into_iter().collect();
    let dropped = max_s_disjoint(g, &input_reachable_set(g))
        .edges()
        .iter()
        .filter(|e| !used.contains(e))
        .copied()
        .collect();
    Decomposition { config, dropped }
}

/// Best configuration whose stems and cycles each use a single subsystem
/// digraph `G_i`.
pub fn conventional_cactus_cover(g: &ColoredUnionGraph) -> CactusConfiguration {
    best_of(single_color_covers(g))
}

/// Walks from the stem root to each of its states along the tree.
pub fn stem_walks(stem: &GeneralizedStem) -> Vec<InputStateWalk> {
    let into: HashMap<usize, ColoredEdge> = stem.edges.iter().map(|e| (e.head, *e)).collect();
    stem.vertices()
        .into_iter()
        .map(|v| {
            let mut rev = vec![into[&v]];
            while let Vertex::State(t) = rev.last().unwrap().tail {
                rev.push(into[&t]);
            }
            rev.reverse();
            InputStateWalk::from_edges(&rev).expect("stem paths start at the root")
        })
        .collect()
}

/// Shortest colored path from some input to `target` in `g`, by BFS, never
/// passing through a state in `avoid`.
fn input_path_to(g: &ColoredUnionGraph, target: usize, avoid: &BTreeSet<usize>) -> Option<Vec<ColoredEdge>> {
    let mut via: HashMap<usize, ColoredEdge> = HashMap::new();
    let mut queue = VecDeque::new();
    let visit = |e: &ColoredEdge, via: &mut HashMap<usize, ColoredEdge>, queue: &mut VecDeque<usize>| {
        if (e.head == target || !avoid.contains(&e.head)) && !via.contains_key(&e.head) {
            via.insert(e.head, *e);
            if e.head != target {
                queue.push_back(e.head);
            }
        }
    };
    for u in g.inputs() {
        for e in g.out_edges(Vertex::Input(u)) {
            visit(e, &mut via, &mut queue);
        }
    }
    while let Some(x) = queue.pop_front() {
        for e in g.out_edges(Vertex::State(x)) {
            visit(e, &mut via, &mut queue);
        }
    }
    let mut rev = vec![*via.get(&target)?];
    while let Vertex::State(t) = rev.last().unwrap().tail {
        rev.push(via[&t]);
    }
    rev.reverse();
    Some(rev)
}

fn bud_walks_from(bud: &GeneralizedBud, entry: usize, prefix: &[ColoredEdge], q: usize) -> Option<Vec<InputStateWalk>> {
    let pos = bud.cycle.iter().position(|&v| v == entry)?;
    let opening = bud.cycle_edge_into(entry)?;
    let r = bud.cycle.len();
    let mut cycle_edges = Vec::with_capacity(r);
    for k in 1..=r {
        cycle_edges.push(bud.cycle_edge_into(bud.cycle[(pos + k) % r])?);
    }
    // Cutting the cycle edge into `entry` leaves a tree rooted at `entry`.
    let into: HashMap<usize, ColoredEdge> = bud
        .edges
        .iter()
        .filter(|e| **e != opening)
        .map(|e| (e.head, *e))
        .collect();
    let mut walks = Vec::new();
    for v in bud.vertices() {
        let mut tail_part = Vec::new();
        let mut cur = v;
        while cur != entry {
            let e = into[&cur];
            tail_part.push(e);
            cur = e.tail.state().expect("bud edges are state edges");
        }
        tail_part.reverse();
        let mut edges = prefix.to_vec();
        for _ in 0..q {
            edges.extend(cycle_edges.iter().copied());
        }
        edges.extend(tail_part);
        walks.push(InputStateWalk::from_edges(&edges).ok()?);
    }
    Some(walks)
}

/// Walks `u -> x_i`, `q` turns around the cycle, then down the bud to each
/// of its states, for a cycle vertex `x_i`.
///
/// The entry `x_i` and the input path to it are chosen so that the path
/// avoids the other bud vertices whenever possible; a path that re-enters
/// the bud can reuse a color at a bud vertex and make two MDG paths meet.
/// Candidates are tried in order and the first whose walks form a linking
/// is returned; if none does, the first candidate is returned as is.
pub fn bud_walks(bud: &GeneralizedBud, g: &ColoredUnionGraph, q: usize) -> Option<Vec<InputStateWalk>> {
    let members = bud.vertices();
    let none = BTreeSet::new();
    let mut first = None;
    for avoid in [&members, &none] {
        for &entry in &bud.cycle {
            let Some(prefix) = input_path_to(g, entry, avoid) else {
                continue;
            };
            let Some(walks) = bud_walks_from(bud, entry, &prefix, q) else {
                continue;
            };
            let limit = walks.iter().map(|w| w.len()).max().unwrap_or(0);
            if verify_cactus_walking(&walks, g, limit).is_ok() {
                return Some(walks);
            }
            first.get_or_insert(walks);
        }
    }
    first
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkingError {
    #[error("walk {index} is invalid: {source}")]
    InvalidWalk { index: usize, source: WalkError },
    #[error("walk {index} has length {length}, above the limit {limit}")]
    TooLong { index: usize, length: usize, limit: usize },
    #[error("walks {first} and {second} meet at MDG vertex {vertex}")]
    Collision {
        first: usize,
        second: usize,
        vertex: MdgVertex,
    },
}

/// Sufficient test for vertex-disjoint MDG paths, read off the walks alone.
///
/// Both walks are traversed backwards from their heads in lockstep. If they
/// never stand on the same vertex at the same time, or if at the first such
/// meeting the colors traversed so far differ, the MDG paths are disjoint.
pub fn distinct_colors_disjoint(p: &InputStateWalk, q: &InputStateWalk) -> bool {
    let at = |w: &InputStateWalk, t: usize| -> Vertex {
        let k = w.len();
        if t < k {
            Vertex::State(w.states()[k - 1 - t])
        } else {
            Vertex::Input(w.input())
        }
    };
    let horizon = p.len().min(q.len());
    for t in 0..=horizon {
        if at(p, t) == at(q, t) {
            let cp = &p.colors()[p.len() - t..];
            let cq = &q.colors()[q.len() - t..];
            return cp != cq;
        }
    }
    true
}

/// Maps each walk to its MDG path and checks that the paths form a linking.
/// Returns the linking size.
pub fn verify_cactus_walking(
    walks: &[InputStateWalk],
    g: &ColoredUnionGraph,
    limit: usize,
) -> Result<usize, WalkingError> {
    let mut paths = Vec::with_capacity(walks.len());
    for (index, w) in walks.iter().enumerate() {
        w.check_in(g)
            .map_err(|source| WalkingError::InvalidWalk { index, source })?;
        if w.len() > limit {
            return Err(WalkingError::TooLong {
                index,
                length: w.len(),
                limit,
            });
        }
        let path = walk_mdg_path(w, g.num_colors()).map_err(|_| WalkingError::TooLong {
            index,
            length: w.len(),
            limit,
        })?;
        paths.push(path);
    }
    let mut owner: HashMap<MdgVertex, usize> = HashMap::new();
    for (i, path) in paths.iter().enumerate() {
        for v in path {
            if let Some(&j) = owner.get(v) {
                if j != i {
                    return Err(WalkingError::Collision {
                        first: j,
                        second: i,
                        vertex: *v,
                    });
                }
            }
            owner.insert(*v, i);
        }
    }
    Ok(walks.len())
}
