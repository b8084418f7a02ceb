//! Dinic's blocking-flow max-flow on integer capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    rev: usize,
}

/// Residual network. Arc ids returned by [`FlowNetwork::add_edge`] can be
/// used to read back the flow after [`FlowNetwork::max_flow`].
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    graph: Vec<Vec<Arc>>,
    original: Vec<(usize, usize, i64)>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            graph: vec![Vec::new(); nodes],
            original: Vec::new(),
            level: vec![-1; nodes],
            next: vec![0; nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.len()
    }

    /// Adds a directed arc and returns its id.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc { to, cap, rev: bwd });
        self.graph[to].push(Arc {
            to: from,
            cap: 0,
            rev: fwd,
        });
        self.original.push((from, fwd, cap));
        self.original.len() - 1
    }

    /// Flow currently carried by arc `id`.
    pub fn flow(&self, id: usize) -> i64 {
        let (from, idx, cap) = self.original[id];
        cap - self.graph[from][idx].cap
    }

    /// Head of arc `id`.
    pub fn target(&self, id: usize) -> usize {
        let (from, idx, _) = self.original[id];
        self.graph[from][idx].to
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for a in &self.graph[v] {
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: i64) -> i64 {
        if v == t {
            return pushed;
        }
        while self.next[v] < self.graph[v].len() {
            let i = self.next[v];
            let Arc { to, cap, rev } = self.graph[v][i];
            if cap > 0 && self.level[to] == self.level[v] + 1 {
                let d = self.dfs(to, t, pushed.min(cap));
                if d > 0 {
                    self.graph[v][i].cap -= d;
                    self.graph[to][rev].cap += d;
                    return d;
                }
            }
            self.next[v] += 1;
        }
        0
    }

    /// Maximum `s`-`t` flow value. May be called once per network.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|n| *n = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_network() {
        let mut g = FlowNetwork::new(6);
        g.add_edge(0, 1, 10);
        g.add_edge(0, 2, 10);
        g.add_edge(1, 3, 4);
        g.add_edge(1, 4, 8);
        g.add_edge(2, 4, 9);
        g.add_edge(3, 5, 10);
        g.add_edge(4, 3, 6);
        g.add_edge(4, 5, 10);
        assert_eq!(g.max_flow(0, 5), 19);
    }

    #[test]
    fn disconnected() {
        let mut g = FlowNetwork::new(4);
        g.add_edge(0, 1, 1);
        g.add_edge(2, 3, 1);
        assert_eq!(g.max_flow(0, 3), 0);
    }

    #[test]
    fn unit_capacity_flows_are_readable() {
        // Two disjoint routes 0->1->3 and 0->2->3 plus a cross arc.
        let mut g = FlowNetwork::new(4);
        let a = g.add_edge(0, 1, 1);
        let b = g.add_edge(0, 2, 1);
        g.add_edge(1, 2, 1);
        g.add_edge(1, 3, 1);
        g.add_edge(2, 3, 1);
        assert_eq!(g.max_flow(0, 3), 2);
        assert_eq!(g.flow(a) + g.flow(b), 2);
        assert_eq!(g.target(a), 1);
    }
}
