//! The multi-layer dynamic graph (MDG) of a switched structure.
//!
//! Layer 0 holds the states `x^{00}_{j0}` and one copy of every input. Layer
//! `i >= 1` holds `N^{i-1}` copies ("blocks") of the state set per subsystem
//! `k`, written `x^{kt}_{ji}`, and each block owns a private copy of every
//! input. A state edge of color `k` leaves block `(k, t)` of layer `i` and
//! enters block `(k', t')` of layer `i - 1`, where
//! `t = (k' - 1) N^{i-2} + t'` in 1-based indexing; layer 1 feeds the merged
//! layer 0. Paths from inputs to layer 0 are in bijection with the nonzero
//! product terms of the columns of `W_l = [Gamma_0, .., Gamma_l]`.
//!
//! In memory, subsystems, copies and coordinates are 0-based; `Display`
//! prints them 1-based.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::cactus::InputStateWalk;
use crate::field::{FpMatrix, Prime};
use crate::flow::FlowNetwork;
use crate::model::{EntryKey, FieldTag, MatrixTag, Realization, SwitchedStructure};

/// Copy-block index `(k, t)` inside a layer `i >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    pub subsystem: usize,
    pub copy: u128,
}

/// Vertex of the MDG. `block` is `None` exactly on layer 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MdgVertex {
    State {
        layer: usize,
        block: Option<Block>,
        coord: usize,
    },
    Input {
        layer: usize,
        block: Option<Block>,
        subsystem: usize,
        coord: usize,
    },
}

impl MdgVertex {
    pub fn layer(&self) -> usize {
        match *self {
            MdgVertex::State { layer, .. } | MdgVertex::Input { layer, .. } => layer,
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, MdgVertex::Input { .. })
    }

    pub fn block(&self) -> Option<Block> {
        match *self {
            MdgVertex::State { block, .. } | MdgVertex::Input { block, .. } => block,
        }
    }
}

fn block_label(block: Option<Block>) -> String {
    match block {
        None => "0,0".to_string(),
        Some(b) => format!("{},{}", b.subsystem + 1, b.copy + 1),
    }
}

impl fmt::Display for MdgVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MdgVertex::State { layer, block, coord } => {
                write!(f, "x^{{{}}}_{{{},{}}}", block_label(block), coord + 1, layer)
            }
            MdgVertex::Input {
                layer,
                block,
                subsystem,
                coord,
            } => write!(
                f,
                "u^{{{}}}_{{{},{},{}}}",
                block_label(block),
                coord + 1,
                subsystem + 1,
                layer
            ),
        }
    }
}

impl Serialize for MdgVertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdgEdge {
    pub from: usize,
    pub to: usize,
    /// The entry of `A_k` or `B_l` this edge carries.
    pub weight: EntryKey,
}

/// Size guards for materializing an MDG.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdgLimits {
    pub max_layers: usize,
    pub max_vertices: usize,
}

impl Default for MdgLimits {
    fn default() -> Self {
        MdgLimits {
            max_layers: 12,
            max_vertices: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MdgError {
    #[error("{requested} layers exceed the cap of {cap}")]
    TooManyLayers { requested: usize, cap: usize },
    #[error("MDG with {layers} layers would have {count} vertices (grows like N^l with N = {subsystems}); cap is {cap}")]
    TooManyVertices {
        layers: usize,
        subsystems: usize,
        count: u128,
        cap: usize,
    },
    #[error("walk of length {length} does not fit in an MDG with {layers} layers")]
    WalkTooLong { length: usize, layers: usize },
    #[error("walk step {step} uses an edge that is not in the MDG")]
    MissingEdge { step: usize },
    #[error("copy index overflow at layer {layer}")]
    CopyOverflow { layer: usize },
    #[error("instance too large for exhaustive linking enumeration: {0}")]
    InstanceTooLarge(String),
    #[error("invalid vertex selection: {0}")]
    InvalidSelection(String),
}

/// Number of vertices of the MDG with `layers` layers above layer 0.
pub fn mdg_vertex_count(n: usize, num_subsystems: usize, total_inputs: usize, layers: usize) -> Option<u128> {
    let per_copy = (n + total_inputs) as u128;
    let big_n = num_subsystems as u128;
    let mut count = per_copy;
    let mut copies: u128 = 1;
    for _ in 0..layers {
        copies = copies.checked_mul(big_n)?;
        count = count.checked_add(copies.checked_mul(per_copy)?)?;
    }
    Some(count)
}

/// Block in layer `layer - 1` that block `(k, t)` of `layer` feeds into, or
/// `None` when `layer == 1` (layer 0 is merged).
pub fn parent_block(block: Block, layer: usize, num_subsystems: usize) -> Option<Block> {
    if layer <= 1 {
        return None;
    }
    let stride = (num_subsystems as u128).pow((layer - 2) as u32);
    Some(Block {
        subsystem: (block.copy / stride) as usize,
        copy: block.copy % stride,
    })
}

/// Subsystem indices applied along the way from `(layer, block)` down to
/// layer 0, ordered from the top layer to layer 1.
pub fn block_chain(layer: usize, block: Option<Block>, num_subsystems: usize) -> Vec<usize> {
    let mut chain = Vec::with_capacity(layer);
    let mut cur = block;
    let mut l = layer;
    while let Some(b) = cur {
        chain.push(b.subsystem);
        cur = parent_block(b, l, num_subsystems);
        l -= 1;
    }
    chain
}

#[derive(Debug, Clone)]
pub struct MultiLayerDynamicGraph {
    n: usize,
    num_subsystems: usize,
    layers: usize,
    vertices: Vec<MdgVertex>,
    index: HashMap<MdgVertex, usize>,
    edges: Vec<MdgEdge>,
    out: Vec<Vec<usize>>,
    edge_lookup: HashSet<(usize, usize)>,
}

impl MultiLayerDynamicGraph {
    fn add_vertex(&mut self, v: MdgVertex) -> usize {
        let id = self.vertices.len();
        self.vertices.push(v);
        self.index.insert(v, id);
        self.out.push(Vec::new());
        id
    }

    fn add_edge(&mut self, from: MdgVertex, to: MdgVertex, weight: EntryKey) {
        let from = self.index[&from];
        let to = self.index[&to];
        self.out[from].push(self.edges.len());
        self.edges.push(MdgEdge { from, to, weight });
        self.edge_lookup.insert((from, to));
    }

    /// Number of layers above layer 0 (`l` in `G_l`).
    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_subsystems(&self) -> usize {
        self.num_subsystems
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[MdgVertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: usize) -> MdgVertex {
        self.vertices[id]
    }

    pub fn id_of(&self, v: &MdgVertex) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn edges(&self) -> &[MdgEdge] {
        &self.edges
    }

    pub fn out_edges(&self, id: usize) -> impl Iterator<Item = &MdgEdge> {
        self.out[id].iter().map(|&e| &self.edges[e])
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edge_lookup.contains(&(from, to))
    }

    /// Ids of the layer-0 states `x^{00}_{j0}`, ordered by coordinate.
    pub fn x0(&self) -> Vec<usize> {
        (0..self.n)
            .map(|coord| {
                self.index[&MdgVertex::State {
                    layer: 0,
                    block: None,
                    coord,
                }]
            })
            .collect()
    }

    /// Ids of all input copies.
    pub fn inputs(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i].is_input())
            .collect()
    }

    pub fn state_count_in_layer(&self, layer: usize) -> usize {
        self.vertices
            .iter()
            .filter(|v| !v.is_input() && v.layer() == layer)
            .count()
    }

    pub fn input_count_in_layer(&self, layer: usize) -> usize {
        self.vertices
            .iter()
            .filter(|v| v.is_input() && v.layer() == layer)
            .count()
    }

    /// MDG path of an input-state walk, tail first. A walk with `k` edges
    /// puts its input on layer `k - 1`, so it needs `k - 1 <= layers`.
    pub fn path_of_walk(&self, walk: &InputStateWalk) -> Result<Vec<usize>, MdgError> {
        if walk.len() > self.layers + 1 {
            return Err(MdgError::WalkTooLong {
                length: walk.len(),
                layers: self.layers,
            });
        }
        let keys = walk_mdg_path(walk, self.num_subsystems)?;
        let ids: Vec<usize> = keys
            .iter()
            .enumerate()
            .map(|(step, k)| self.id_of(k).ok_or(MdgError::MissingEdge { step }))
            .collect::<Result<_, _>>()?;
        for (step, pair) in ids.windows(2).enumerate() {
            if !self.has_edge(pair[0], pair[1]) {
                return Err(MdgError::MissingEdge { step });
            }
        }
        Ok(ids)
    }
}

/// Materializes the MDG with `layers` layers above layer 0.
pub fn build_mdg(
    sys: &SwitchedStructure,
    layers: usize,
    limits: MdgLimits,
) -> Result<MultiLayerDynamicGraph, MdgError> {
    if layers > limits.max_layers {
        return Err(MdgError::TooManyLayers {
            requested: layers,
            cap: limits.max_layers,
        });
    }
    let n = sys.n();
    let big_n = sys.num_subsystems();
    let input_dims = sys.input_dims();
    let total_inputs = sys.total_inputs();
    let count = mdg_vertex_count(n, big_n, total_inputs, layers).unwrap_or(u128::MAX);
    if count > limits.max_vertices as u128 {
        return Err(MdgError::TooManyVertices {
            layers,
            subsystems: big_n,
            count,
            cap: limits.max_vertices,
        });
    }

    let mut g = MultiLayerDynamicGraph {
        n,
        num_subsystems: big_n,
        layers,
        vertices: Vec::with_capacity(count as usize),
        index: HashMap::with_capacity(count as usize),
        edges: Vec::new(),
        out: Vec::with_capacity(count as usize),
        edge_lookup: HashSet::new(),
    };

    // Blocks present in each layer; layer 0 is the single merged block.
    let mut layer_blocks: Vec<Vec<Option<Block>>> = vec![vec![None]];
    for i in 1..=layers {
        let copies = (big_n as u128).pow((i - 1) as u32);
        let mut blocks = Vec::new();
        for subsystem in 0..big_n {
            for copy in 0..copies {
                blocks.push(Some(Block { subsystem, copy }));
            }
        }
        layer_blocks.push(blocks);
    }

    for (layer, blocks) in layer_blocks.iter().enumerate() {
        for &block in blocks {
            for coord in 0..n {
                g.add_vertex(MdgVertex::State { layer, block, coord });
            }
            for (subsystem, &m) in input_dims.iter().enumerate() {
                for coord in 0..m {
                    g.add_vertex(MdgVertex::Input {
                        layer,
                        block,
                        subsystem,
                        coord,
                    });
                }
            }
        }
    }

    for (layer, blocks) in layer_blocks.iter().enumerate() {
        for &block in blocks {
            // Input edges inside the block, weights from B_l.
            for (l, s) in sys.subsystems().iter().enumerate() {
                for (q, j) in s.b.iter() {
                    g.add_edge(
                        MdgVertex::Input {
                            layer,
                            block,
                            subsystem: l,
                            coord: j,
                        },
                        MdgVertex::State {
                            layer,
                            block,
                            coord: q,
                        },
                        EntryKey {
                            subsystem: l,
                            matrix: MatrixTag::B,
                            row: q,
                            col: j,
                        },
                    );
                }
            }
            // Cross-layer edges of color k into exactly one block below.
            if let Some(b) = block {
                let target = parent_block(b, layer, big_n);
                for (p, j) in sys.subsystem(b.subsystem).a.iter() {
                    g.add_edge(
                        MdgVertex::State {
                            layer,
                            block,
                            coord: j,
                        },
                        MdgVertex::State {
                            layer: layer - 1,
                            block: target,
                            coord: p,
                        },
                        EntryKey {
                            subsystem: b.subsystem,
                            matrix: MatrixTag::A,
                            row: p,
                            col: j,
                        },
                    );
                }
            }
        }
    }

    debug_assert_eq!(g.vertices.len() as u128, count);
    Ok(g)
}

/// MDG path of a walk as vertex keys, tail first, without materializing
/// the graph. The walk's last state lands on layer 0 and its input on layer
/// `|p| - 1`.
pub fn walk_mdg_path(walk: &InputStateWalk, num_subsystems: usize) -> Result<Vec<MdgVertex>, MdgError> {
    let k = walk.len();
    let states = walk.states();
    let colors = walk.colors();
    let mut rev = Vec::with_capacity(k + 1);
    let mut block: Option<Block> = None;
    rev.push(MdgVertex::State {
        layer: 0,
        block: None,
        coord: states[k - 1],
    });
    // State s (0-based) sits on layer k-1-s; its block subsystem is the color
    // of the edge leaving it.
    for s in (0..k - 1).rev() {
        let layer = k - 1 - s;
        let subsystem = colors[s + 1];
        let copy = match block {
            None => 0,
            Some(below) => {
                let stride = (num_subsystems as u128)
                    .checked_pow((layer - 2) as u32)
                    .ok_or(MdgError::CopyOverflow { layer })?;
                (below.subsystem as u128)
                    .checked_mul(stride)
                    .and_then(|v| v.checked_add(below.copy))
                    .ok_or(MdgError::CopyOverflow { layer })?
            }
        };
        block = Some(Block { subsystem, copy });
        rev.push(MdgVertex::State {
            layer,
            block,
            coord: states[s],
        });
    }
    let input = walk.input();
    rev.push(MdgVertex::Input {
        layer: k - 1,
        block,
        subsystem: input.subsystem,
        coord: input.index,
    });
    rev.reverse();
    Ok(rev)
}

/// A collection of vertex-disjoint input-to-layer-0 paths (tail first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Linking {
    pub paths: Vec<Vec<usize>>,
}

impl Linking {
    pub fn size(&self) -> usize {
        self.paths.len()
    }

    pub fn tails(&self) -> Vec<usize> {
        self.paths.iter().map(|p| p[0]).collect()
    }

    pub fn heads(&self) -> Vec<usize> {
        self.paths.iter().map(|p| *p.last().unwrap()).collect()
    }

    /// Checks vertex-disjointness, edge membership, endpoints, and that each
    /// state step descends exactly one layer.
    pub fn verify(&self, mdg: &MultiLayerDynamicGraph) -> bool {
        let mut seen = HashSet::new();
        for p in &self.paths {
            if p.is_empty() || !mdg.vertex(p[0]).is_input() {
                return false;
            }
            let last = mdg.vertex(*p.last().unwrap());
            if last.is_input() || last.layer() != 0 {
                return false;
            }
            for pair in p.windows(2) {
                if !mdg.has_edge(pair[0], pair[1]) {
                    return false;
                }
            }
            for w in p.windows(2).skip(1) {
                if mdg.vertex(w[0]).layer() != mdg.vertex(w[1]).layer() + 1 {
                    return false;
                }
            }
            if !p.iter().all(|&v| seen.insert(v)) {
                return false;
            }
        }
        true
    }

    pub fn certificate(&self, mdg: &MultiLayerDynamicGraph) -> LinkingCertificate {
        LinkingCertificate {
            layers: mdg.layers(),
            size: self.size(),
            paths: self
                .paths
                .iter()
                .map(|p| PathCertificate {
                    tail: mdg.vertex(p[0]),
                    head: mdg.vertex(*p.last().unwrap()),
                    vertices: p.iter().map(|&v| mdg.vertex(v)).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkingCertificate {
    pub layers: usize,
    pub size: usize,
    pub paths: Vec<PathCertificate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathCertificate {
    pub tail: MdgVertex,
    pub head: MdgVertex,
    pub vertices: Vec<MdgVertex>,
}

/// Maximum input-to-layer-0 linking via vertex splitting and unit-capacity
/// max-flow; the flow is decomposed into explicit paths.
pub fn max_linking(mdg: &MultiLayerDynamicGraph) -> Linking {
    let v = mdg.vertex_count();
    let source = 2 * v;
    let sink = 2 * v + 1;
    let mut net = FlowNetwork::new(2 * v + 2);
    let inn = |x: usize| 2 * x;
    let out = |x: usize| 2 * x + 1;
    let mut source_arcs = Vec::new();
    for id in 0..v {
        net.add_edge(inn(id), out(id), 1);
        if mdg.vertex(id).is_input() {
            source_arcs.push((id, net.add_edge(source, inn(id), 1)));
        }
    }
    let mut edge_arcs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v];
    for e in mdg.edges() {
        let arc = net.add_edge(out(e.from), inn(e.to), 1);
        edge_arcs[e.from].push((arc, e.to));
    }
    for id in mdg.x0() {
        net.add_edge(out(id), sink, 1);
    }
    net.max_flow(source, sink);

    let mut paths = Vec::new();
    for (tail, arc) in source_arcs {
        if net.flow(arc) == 0 {
            continue;
        }
        let mut path = vec![tail];
        let mut cur = tail;
        // The MDG is acyclic, so following flow-carrying arcs terminates at
        // a layer-0 state.
        while let Some(&(_, to)) = edge_arcs[cur].iter().find(|&&(a, _)| net.flow(a) > 0) {
            path.push(to);
            cur = to;
        }
        paths.push(path);
    }
    paths.sort();
    Linking { paths }
}

/// Evaluates both sides of the determinant/linking identity on a small
/// instance: `det W_l(I, J)` from explicit matrix products, and the signed
/// sum of `w(L)` over all `J`-`I` linkings of size `|I|` by enumeration.
pub fn det_vs_linkings(
    sys: &SwitchedStructure,
    realization: &Realization,
    rows: &[MdgVertex],
    cols: &[MdgVertex],
    layers: usize,
) -> Result<(u64, u64), MdgError> {
    if sys.n() > 4 || sys.num_subsystems() > 2 || layers > 3 {
        return Err(MdgError::InstanceTooLarge(format!(
            "n = {}, N = {}, layers = {} (limits 4, 2, 3)",
            sys.n(),
            sys.num_subsystems(),
            layers
        )));
    }
    let FieldTag::FiniteField(prime) = realization.field else {
        return Err(MdgError::InvalidSelection("realization must be over a finite field".into()));
    };
    if rows.len() != cols.len() {
        return Err(MdgError::InvalidSelection(format!(
            "|I| = {} but |J| = {}",
            rows.len(),
            cols.len()
        )));
    }
    let mdg = build_mdg(sys, layers, MdgLimits::default())?;
    let rows: Vec<MdgVertex> = rows.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let cols: Vec<MdgVertex> = cols.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if rows.len() != cols.len() {
        return Err(MdgError::InvalidSelection("duplicate vertices in I or J".into()));
    }
    for r in &rows {
        if !matches!(r, MdgVertex::State { layer: 0, .. }) || mdg.id_of(r).is_none() {
            return Err(MdgError::InvalidSelection(format!("{r} is not a layer-0 state")));
        }
    }
    for c in &cols {
        if !c.is_input() || mdg.id_of(c).is_none() {
            return Err(MdgError::InvalidSelection(format!("{c} is not an input of the MDG")));
        }
    }

    let det = explicit_det(sys, realization, prime, &rows, &cols);
    let sum = signed_linking_sum(&mdg, realization, prime, &rows, &cols);
    Ok((det, sum))
}

/// Column of `W_l` belonging to an input copy: `A_{k_1} .. A_{k_i} B_l e_j`.
pub fn w_column(
    sys: &SwitchedStructure,
    mats: &[(FpMatrix, FpMatrix)],
    input: &MdgVertex,
) -> Vec<u64> {
    let MdgVertex::Input {
        layer,
        block,
        subsystem,
        coord,
    } = *input
    else {
        panic!("w_column needs an input vertex");
    };
    let mut v = mats[subsystem].1.column(coord);
    for k in block_chain(layer, block, sys.num_subsystems()) {
        v = mats[k].0.mul_vec(&v);
    }
    v
}

fn explicit_det(
    sys: &SwitchedStructure,
    realization: &Realization,
    prime: Prime,
    rows: &[MdgVertex],
    cols: &[MdgVertex],
) -> u64 {
    if rows.is_empty() {
        return 1;
    }
    let mats = realization.fp_matrices(sys);
    let row_coords: Vec<usize> = rows
        .iter()
        .map(|r| match r {
            MdgVertex::State { coord, .. } => *coord,
            MdgVertex::Input { .. } => unreachable!(),
        })
        .collect();
    let columns: Vec<Vec<u64>> = cols
        .iter()
        .map(|c| {
            let full = w_column(sys, &mats, c);
            row_coords.iter().map(|&r| full[r]).collect()
        })
        .collect();
    FpMatrix::from_columns(rows.len(), &columns, prime).det()
}

fn enumerate_paths(mdg: &MultiLayerDynamicGraph, from: usize, targets: &HashSet<usize>) -> Vec<Vec<usize>> {
    fn go(
        mdg: &MultiLayerDynamicGraph,
        cur: usize,
        targets: &HashSet<usize>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if targets.contains(&cur) {
            out.push(path.clone());
            return;
        }
        for e in mdg.out_edges(cur) {
            path.push(e.to);
            go(mdg, e.to, targets, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(mdg, from, targets, &mut vec![from], &mut out);
    out
}

fn permutation_sign(perm: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

fn signed_linking_sum(
    mdg: &MultiLayerDynamicGraph,
    realization: &Realization,
    prime: Prime,
    rows: &[MdgVertex],
    cols: &[MdgVertex],
) -> u64 {
    let row_ids: Vec<usize> = rows.iter().map(|r| mdg.id_of(r).unwrap()).collect();
    let targets: HashSet<usize> = row_ids.iter().copied().collect();
    let head_rank: HashMap<usize, usize> = row_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let candidates: Vec<Vec<Vec<usize>>> = cols
        .iter()
        .map(|c| enumerate_paths(mdg, mdg.id_of(c).unwrap(), &targets))
        .collect();
    let weight_of = |path: &[usize]| -> u64 {
        path.windows(2).fold(1, |acc, w| {
            let e = mdg
                .out_edges(w[0])
                .find(|e| e.to == w[1])
                .expect("path follows MDG edges");
            prime.mul(acc, realization.residue(&e.weight))
        })
    };

    // tail index -> head rank, filled during backtracking.
    let mut chosen_heads = vec![0usize; cols.len()];
    let mut chosen_weights = vec![0u64; cols.len()];
    let mut used: HashSet<usize> = HashSet::new();
    let mut total = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn go(
        idx: usize,
        candidates: &[Vec<Vec<usize>>],
        head_rank: &HashMap<usize, usize>,
        used: &mut HashSet<usize>,
        chosen_heads: &mut [usize],
        chosen_weights: &mut [u64],
        weight_of: &dyn Fn(&[usize]) -> u64,
        prime: Prime,
        total: &mut u64,
    ) {
        if idx == candidates.len() {
            // chosen_heads[tail] = head; the permutation maps head rank to tail.
            let mut perm = vec![0; chosen_heads.len()];
            for (tail, &head) in chosen_heads.iter().enumerate() {
                perm[head] = tail;
            }
            let w = chosen_weights.iter().fold(1, |acc, &x| prime.mul(acc, x));
            *total = if permutation_sign(&perm) {
                prime.add(*total, w)
            } else {
                prime.sub(*total, w)
            };
            return;
        }
        for path in &candidates[idx] {
            if path.iter().any(|v| used.contains(v)) {
                continue;
            }
            used.extend(path.iter().copied());
            chosen_heads[idx] = head_rank[path.last().unwrap()];
            chosen_weights[idx] = weight_of(path);
            go(
                idx + 1,
                candidates,
                head_rank,
                used,
                chosen_heads,
                chosen_weights,
                weight_of,
                prime,
                total,
            );
            for v in path {
                used.remove(v);
            }
        }
    }

    go(
        0,
        &candidates,
        &head_rank,
        &mut used,
        &mut chosen_heads,
        &mut chosen_weights,
        &weight_of,
        prime,
        &mut total,
    );
    total
}
