//! Exact maximum bipartite matching on graphs implied by type lists.

use std::collections::VecDeque;

use crate::error::{invalid, Result};
use crate::types::{Matching, TypeHistogram, VertexType};

/// Bipartite graph with `n` offline vertices and one online vertex per entry
/// of `online_types`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImpliedGraph {
    n: usize,
    online_types: Vec<VertexType>,
}

impl ImpliedGraph {
    pub fn new(n: usize, online_types: Vec<VertexType>) -> Result<Self> {
        if let Some(t) = online_types.iter().find(|t| !t.is_valid_for(n)) {
            return invalid(format!("type {{{t}}} is not valid for n = {n}"));
        }
        Ok(ImpliedGraph { n, online_types })
    }

    /// Online vertices ordered by sorted type, then multiplicity.
    pub fn from_histogram(hist: &TypeHistogram) -> Self {
        ImpliedGraph { n: hist.n(), online_types: hist.expand() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn online_len(&self) -> usize {
        self.online_types.len()
    }

    pub fn online_types(&self) -> &[VertexType] {
        &self.online_types
    }

    pub fn online_type(&self, v: usize) -> &VertexType {
        &self.online_types[v]
    }

    pub fn histogram(&self) -> Result<TypeHistogram> {
        TypeHistogram::from_types(self.n, self.online_types.iter().cloned())
    }
}

const FREE: u32 = u32::MAX;
const INF: u32 = u32::MAX;

/// Hopcroft–Karp restricted to the online vertices in `online_mask` and the
/// offline vertices in `offline_mask` (`None` = everything available).
fn hopcroft_karp(
    g: &ImpliedGraph,
    online_mask: Option<&[bool]>,
    offline_mask: Option<&[bool]>,
) -> Vec<Option<u32>> {
    let nv = g.online_len();
    let online_ok = |v: usize| online_mask.is_none_or(|m| m[v]);
    let offline_ok = |u: u32| offline_mask.is_none_or(|m| m[u as usize]);

    let mut match_v = vec![FREE; nv];
    let mut match_u = vec![FREE; g.n];
    let mut dist = vec![INF; nv];
    let mut queue = VecDeque::new();
    // (online vertex, next neighbor position) frames for the iterative DFS.
    let mut stack: Vec<(usize, usize)> = Vec::new();

    loop {
        // Layered BFS from every free online vertex.
        queue.clear();
        for v in 0..nv {
            if online_ok(v) && match_v[v] == FREE {
                dist[v] = 0;
                queue.push_back(v);
            } else {
                dist[v] = INF;
            }
        }
        let mut found = false;
        while let Some(v) = queue.pop_front() {
            for &u in g.online_types[v].neighbors() {
                if !offline_ok(u) {
                    continue;
                }
                let w = match_u[u as usize];
                if w == FREE {
                    found = true;
                } else if dist[w as usize] == INF {
                    dist[w as usize] = dist[v] + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        if !found {
            break;
        }

        for root in 0..nv {
            if !online_ok(root) || match_v[root] != FREE {
                continue;
            }
            stack.clear();
            stack.push((root, 0));
            let mut augmented = false;
            while let Some(&mut (v, ref mut pos)) = stack.last_mut() {
                let nbrs = g.online_types[v].neighbors();
                let mut descend = None;
                while *pos < nbrs.len() {
                    let u = nbrs[*pos];
                    *pos += 1;
                    if !offline_ok(u) {
                        continue;
                    }
                    let w = match_u[u as usize];
                    if w == FREE {
                        // Flip the alternating path held on the stack.
                        augmented = true;
                        let mut target = u;
                        for &(sv, _) in stack.iter().rev() {
                            let prev = match_v[sv];
                            match_v[sv] = target;
                            match_u[target as usize] = sv as u32;
                            target = prev;
                        }
                        break;
                    } else if dist[w as usize] == dist[v] + 1 {
                        descend = Some(w as usize);
                        break;
                    }
                }
                if augmented {
                    break;
                }
                match descend {
                    Some(w) => stack.push((w, 0)),
                    None => {
                        dist[v] = INF;
                        stack.pop();
                    }
                }
            }
        }
    }

    match_v.into_iter().map(|u| (u != FREE).then_some(u)).collect()
}

/// Maximum-cardinality matching. Deterministic for a fixed input order.
pub fn max_matching(g: &ImpliedGraph) -> Matching {
    Matching::from_assignment(hopcroft_karp(g, None, None))
        .expect("Hopcroft-Karp produces an injective assignment")
}

/// Maximum matching size between online vertices not in `consumed_online`
/// and offline vertices not in `consumed_offline`.
pub fn postfix_optimum(g: &ImpliedGraph, consumed_online: &[bool], consumed_offline: &[bool]) -> usize {
    let online: Vec<bool> = consumed_online.iter().map(|c| !c).collect();
    let offline: Vec<bool> = consumed_offline.iter().map(|c| !c).collect();
    hopcroft_karp(g, Some(&online), Some(&offline)).iter().flatten().count()
}

/// `m / n*`.
pub fn competitive_ratio(m: usize, n_star: usize) -> Result<f64> {
    if n_star == 0 {
        return invalid("optimum matching size is zero");
    }
    if m > n_star {
        return invalid(format!("{m} matches exceed the optimum {n_star}"));
    }
    Ok(m as f64 / n_star as f64)
}

/// Exhaustive maximum matching for tiny graphs (every online vertex either
/// skips or takes any free neighbor). Exponential; test oracle only.
pub fn brute_force_max_matching(online_types: &[VertexType], n: usize) -> usize {
    fn go(types: &[VertexType], used: &mut [bool]) -> usize {
        let Some((first, rest)) = types.split_first() else {
            return 0;
        };
        let mut best = go(rest, used);
        for &u in first.neighbors() {
            if !used[u as usize] {
                used[u as usize] = true;
                best = best.max(1 + go(rest, used));
                used[u as usize] = false;
            }
        }
        best
    }
    go(online_types, &mut vec![false; n])
}
