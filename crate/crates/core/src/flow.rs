//! Dinic max flow on small integer-capacity networks.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: u64,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    original: Vec<u64>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { adj: vec![Vec::new(); nodes], edges: Vec::new(), original: Vec::new() }
    }

    /// Adds `from → to` and returns its handle for [`FlowNetwork::flow`].
    pub fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let id = self.edges.len();
        self.adj[from].push(id);
        self.edges.push(Edge { to, cap });
        self.original.push(cap);
        self.adj[to].push(id + 1);
        self.edges.push(Edge { to: from, cap: 0 });
        self.original.push(0);
        id
    }

    /// Flow currently routed through edge `id`.
    pub fn flow(&self, id: usize) -> u64 {
        self.original[id] - self.edges[id].cap
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> u64 {
        let nodes = self.adj.len();
        let mut total = 0;
        let mut level = vec![usize::MAX; nodes];
        let mut next = vec![0usize; nodes];
        loop {
            level.fill(usize::MAX);
            level[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(v) = queue.pop_front() {
                for &e in &self.adj[v] {
                    let Edge { to, cap } = self.edges[e];
                    if cap > 0 && level[to] == usize::MAX {
                        level[to] = level[v] + 1;
                        queue.push_back(to);
                    }
                }
            }
            if level[sink] == usize::MAX {
                return total;
            }
            next.fill(0);
            loop {
                let pushed = self.augment(source, sink, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    /// One blocking-flow path found by an explicit-stack DFS.
    fn augment(&mut self, source: usize, sink: usize, level: &[usize], next: &mut [usize]) -> u64 {
        let mut path: Vec<usize> = Vec::new();
        let mut v = source;
        loop {
            if v == sink {
                let pushed = path.iter().map(|&e| self.edges[e].cap).min().unwrap_or(0);
                for &e in &path {
                    self.edges[e].cap -= pushed;
                    self.edges[e ^ 1].cap += pushed;
                }
                return pushed;
            }
            let mut advanced = false;
            while next[v] < self.adj[v].len() {
                let e = self.adj[v][next[v]];
                let Edge { to, cap } = self.edges[e];
                if cap > 0 && level[to] == level[v] + 1 {
                    path.push(e);
                    v = to;
                    advanced = true;
                    break;
                }
                next[v] += 1;
            }
            if !advanced {
                if v == source {
                    return 0;
                }
                // Dead end: retreat and skip the edge that led here.
                let e = path.pop().expect("non-source node has an incoming path edge");
                v = self.edges[e ^ 1].to;
                next[v] += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // CLRS example, max flow 23.
        let mut g = FlowNetwork::new(6);
        let edges = [(0, 1, 16), (0, 2, 13), (1, 3, 12), (2, 1, 4), (2, 4, 14), (3, 2, 9), (3, 5, 20), (4, 3, 7), (4, 5, 4)];
        let ids: Vec<_> = edges.iter().map(|&(a, b, c)| g.add_edge(a, b, c)).collect();
        assert_eq!(g.max_flow(0, 5), 23);
        for (&id, &(_, _, c)) in ids.iter().zip(&edges) {
            assert!(g.flow(id) <= c);
        }
        let out: u64 = ids.iter().zip(&edges).filter(|(_, e)| e.0 == 0).map(|(&id, _)| g.flow(id)).sum();
        assert_eq!(out, 23);
    }

    #[test]
    fn disconnected_sink() {
        let mut g = FlowNetwork::new(3);
        g.add_edge(0, 1, 5);
        assert_eq!(g.max_flow(0, 2), 0);
    }
}
