//! Brute-force oracles shared by the integration tests. They work from the
//! definitions alone and share no code with the library algorithms they
//! check.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use structctl::unigraph::{ColoredEdge, ColoredUnionGraph, Vertex};

/// Largest S-disjoint subset of `edges`, by trying every subset.
pub fn brute_s_disjoint(edges: &[ColoredEdge]) -> usize {
    assert!(edges.len() <= 20);
    let mut best = 0;
    for mask in 0u32..(1 << edges.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut heads = HashSet::new();
        let mut tails = HashSet::new();
        let ok = (0..edges.len())
            .filter(|i| mask >> i & 1 == 1)
            .all(|i| heads.insert(edges[i].head) && tails.insert((edges[i].tail, edges[i].color)));
        if ok {
            best = size;
        }
    }
    best
}

/// Kuhn's augmenting-path matching; returns the matching size.
fn kuhn(adj: &[Vec<usize>], n_right: usize) -> usize {
    fn try_augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none() || try_augment(owner[v].unwrap(), adj, seen, owner) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    (0..adj.len())
        .filter(|&u| try_augment(u, adj, &mut vec![false; n_right], &mut owner))
        .count()
}

/// States reachable from an input, by repeated relaxation.
pub fn brute_reachable(g: &ColoredUnionGraph) -> BTreeSet<usize> {
    let mut reach: BTreeSet<usize> = g.input_edges().map(|e| e.head).collect();
    loop {
        let before = reach.len();
        for e in g.state_edges() {
            if let Vertex::State(t) = e.tail {
                if reach.contains(&t) {
                    reach.insert(e.head);
                }
            }
        }
        if reach.len() == before {
            return reach;
        }
    }
}

/// True when some S-disjoint edge set has heads exactly `h` and tails in
/// `h` or the inputs, i.e. `h` is covered by a cactus configuration.
pub fn coverable(g: &ColoredUnionGraph, h: &BTreeSet<usize>) -> bool {
    let mut groups: HashMap<(usize, Vertex), Vec<usize>> = HashMap::new();
    for e in g.edges() {
        let tail_ok = match e.tail {
            Vertex::Input(_) => true,
            Vertex::State(t) => h.contains(&t),
        };
        if tail_ok && h.contains(&e.head) {
            groups.entry((e.color, e.tail)).or_default().push(e.head);
        }
    }
    let adj: Vec<Vec<usize>> = groups.into_values().collect();
    kuhn(&adj, g.n()) == h.len()
}

/// Exact maximum number of states a cactus configuration can cover, by
/// trying every subset of the reachable states. Intended for `n <= 8`.
pub fn exact_max_cover(g: &ColoredUnionGraph) -> usize {
    let reach: Vec<usize> = brute_reachable(g).into_iter().collect();
    assert!(reach.len() <= 12);
    let mut best = 0;
    for mask in 0u32..(1 << reach.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let h: BTreeSet<usize> = (0..reach.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| reach[i])
            .collect();
        if coverable(g, &h) {
            best = size;
        }
    }
    best
}
