//! Hopcroft–Karp maximum bipartite matching.
//!
//! Left vertices are scanned in index order and adjacency lists in the order
//! given, so the returned matching is a deterministic function of the input.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub left_to_right: Vec<Option<usize>>,
    pub right_to_left: Vec<Option<usize>>,
    pub size: usize,
}

impl Matching {
    /// Matched `(left, right)` pairs in left order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left_to_right
            .iter()
            .enumerate()
            .filter_map(|(l, r)| r.map(|r| (l, r)))
    }
}

const INF: usize = usize::MAX;

/// Maximum matching of the bipartite graph with left side `0..adj.len()`
/// and right side `0..n_right`.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Matching {
    let n_left = adj.len();
    let mut left_to_right = vec![None; n_left];
    let mut right_to_left = vec![None; n_right];
    let mut dist = vec![INF; n_left];
    let mut size = 0;

    while bfs(adj, &left_to_right, &right_to_left, &mut dist) {
        let mut next = vec![0usize; n_left];
        for u in 0..n_left {
            if left_to_right[u].is_none()
                && dfs(u, adj, &mut left_to_right, &mut right_to_left, &mut dist, &mut next)
            {
                size += 1;
            }
        }
    }

    Matching {
        left_to_right,
        right_to_left,
        size,
    }
}

fn bfs(
    adj: &[Vec<usize>],
    left_to_right: &[Option<usize>],
    right_to_left: &[Option<usize>],
    dist: &mut [usize],
) -> bool {
    let mut queue = VecDeque::new();
    for (u, m) in left_to_right.iter().enumerate() {
        if m.is_none() {
            dist[u] = 0;
            queue.push_back(u);
        } else {
            dist[u] = INF;
        }
    }
    let mut found = false;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            match right_to_left[v] {
                Some(w) if dist[w] == INF => {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
                Some(_) => {}
                None => found = true,
            }
        }
    }
    found
}

fn dfs(
    u: usize,
    adj: &[Vec<usize>],
    left_to_right: &mut [Option<usize>],
    right_to_left: &mut [Option<usize>],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    while next[u] < adj[u].len() {
        let v = adj[u][next[u]];
        next[u] += 1;
        let ok = match right_to_left[v] {
            None => true,
            Some(w) => {
                dist[w] == dist[u] + 1 && dfs(w, adj, left_to_right, right_to_left, dist, next)
            }
        };
        if ok {
            left_to_right[u] = Some(v);
            right_to_left[v] = Some(u);
            return true;
        }
    }
    dist[u] = INF;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(adj: &[Vec<usize>], n_right: usize) -> usize {
        fn go(u: usize, adj: &[Vec<usize>], used: &mut [bool]) -> usize {
            if u == adj.len() {
                return 0;
            }
            let mut best = go(u + 1, adj, used);
            for &v in &adj[u] {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + go(u + 1, adj, used));
                    used[v] = false;
                }
            }
            best
        }
        go(0, adj, &mut vec![false; n_right])
    }

    #[test]
    fn small_cases() {
        assert_eq!(hopcroft_karp(&[], 0).size, 0);
        let adj = vec![vec![0, 1], vec![0], vec![1]];
        assert_eq!(hopcroft_karp(&adj, 2).size, 2);
        let adj = vec![vec![0], vec![0], vec![0]];
        assert_eq!(hopcroft_karp(&adj, 1).size, 1);
    }

    #[test]
    fn deterministic_pairs() {
        let adj = vec![vec![0, 1], vec![0, 1]];
        let m = hopcroft_karp(&adj, 2);
        assert_eq!(m.pairs().collect::<Vec<_>>(), vec![(0, 0), (1, 1)]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            edges in proptest::collection::vec((0usize..6, 0usize..6), 0..14)
        ) {
            let mut adj = vec![Vec::new(); 6];
            for (l, r) in edges {
                if !adj[l].contains(&r) {
                    adj[l].push(r);
                }
            }
            let m = hopcroft_karp(&adj, 6);
            prop_assert_eq!(m.size, brute_force(&adj, 6));
            for (l, r) in m.pairs() {
                prop_assert!(adj[l].contains(&r));
                prop_assert_eq!(m.right_to_left[r], Some(l));
            }
        }
    }
}
