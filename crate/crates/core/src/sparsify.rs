//! Ultra-sparsification: a spanning tree plus importance-sampled off-tree edges.
//!
//! The importance of an off-tree edge `e = (x, y)` is its capacity stretch
//! `u_e / min{u_f : f on the tree path x..y}`. Each off-tree edge is kept with
//! probability `p_e = min(1, oversample * stretch_e / kappa)` and reweighted to
//! `u_e / p_e`, so every cut keeps its expected capacity.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::graph::{Edge, Graph};
use crate::oracle::BRUTE_FORCE_MAX_N;
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TreeStrategy {
    #[default]
    MaxCapacity,
    LowStretchHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsifyParams {
    pub oversample: f64,
    pub strategy: TreeStrategy,
}

impl Default for SparsifyParams {
    fn default() -> Self {
        SparsifyParams {
            oversample: 4.0,
            strategy: TreeStrategy::MaxCapacity,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UltraSparsifier {
    pub graph: Graph,
    /// Edge ids of `graph` forming the spanning tree (always the first `n - 1` edges).
    pub tree_edges: Vec<usize>,
    pub kappa_target: f64,
    pub off_tree_count: usize,
    /// Original edge id of every edge of `graph`.
    pub origin: Vec<usize>,
}

/// Off-tree edge budget `oversample * m * (log2 n)^2 / kappa`.
pub fn edge_budget(kappa: f64, m: usize, n: usize, oversample: f64) -> f64 {
    let log_n = (n.max(2) as f64).log2();
    oversample * m as f64 * log_n * log_n / kappa
}

/// Spanning tree edge ids, sorted ascending.
pub fn spanning_tree(graph: &Graph, strategy: TreeStrategy, seed: u64) -> Result<Vec<usize>> {
    if graph.n() == 0 {
        return Err(FlowError::domain("empty graph"));
    }
    if !graph.is_connected() {
        return Err(FlowError::Disconnected);
    }
    let mut tree = match strategy {
        TreeStrategy::MaxCapacity => max_capacity_tree(graph),
        TreeStrategy::LowStretchHeuristic => ball_growing_tree(graph, seed),
    };
    tree.sort_unstable();
    debug_assert_eq!(tree.len(), graph.n() - 1);
    Ok(tree)
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        match self.rank[a].cmp(&self.rank[b]) {
            std::cmp::Ordering::Less => self.parent[a] = b,
            std::cmp::Ordering::Greater => self.parent[b] = a,
            std::cmp::Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
            }
        }
        true
    }
}

/// Checks that `edges` is a spanning tree of `graph`.
pub fn is_spanning_tree(graph: &Graph, edges: &[usize]) -> bool {
    if edges.len() + 1 != graph.n() {
        return false;
    }
    let mut uf = UnionFind::new(graph.n());
    edges.iter().all(|&id| {
        let e = graph.edge(id);
        uf.union(e.tail, e.head)
    })
}

fn max_capacity_tree(graph: &Graph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..graph.m()).collect();
    order.sort_by(|&a, &b| {
        graph
            .edge(b)
            .capacity
            .total_cmp(&graph.edge(a).capacity)
            .then(a.cmp(&b))
    });
    let mut uf = UnionFind::new(graph.n());
    order
        .into_iter()
        .filter(|&id| {
            let e = graph.edge(id);
            uf.union(e.tail, e.head)
        })
        .collect()
}

/// Repeated ball growing on the contracted graph: every round grows balls
/// around randomly ordered centres, keeps a heaviest-edge BFS tree inside each
/// ball and contracts the balls.
fn ball_growing_tree(graph: &Graph, seed: u64) -> Vec<usize> {
    let mut rng = seeded(seed);
    let n = graph.n();
    let mut cluster: Vec<usize> = (0..n).collect();
    let mut clusters = n;
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    while clusters > 1 {
        // Contracted adjacency: for every cluster pair keep the heaviest edge.
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); clusters];
        let mut internal = vec![0.0; clusters];
        for (id, e) in graph.edges().iter().enumerate() {
            let (a, b) = (cluster[e.tail], cluster[e.head]);
            if a == b {
                internal[a] += e.capacity;
            } else {
                adj[a].push((b, id));
                adj[b].push((a, id));
            }
        }
        let mut centres: Vec<usize> = (0..clusters).collect();
        centres.shuffle(&mut rng);
        let mut ball = vec![usize::MAX; clusters];
        let mut balls = 0;
        for &c in &centres {
            if ball[c] != usize::MAX {
                continue;
            }
            let id = balls;
            balls += 1;
            ball[c] = id;
            let mut members = vec![c];
            let mut inside_cap = internal[c];
            let mut frontier = vec![c];
            let max_radius = 1 + rng.gen_range(0..3);
            for radius in 0..max_radius {
                // Heaviest connection from the ball into every outside cluster.
                let mut best: Vec<(usize, usize, f64)> = Vec::new();
                let mut slot: std::collections::BTreeMap<usize, usize> = Default::default();
                for &x in &frontier {
                    for &(y, eid) in &adj[x] {
                        if ball[y] != usize::MAX {
                            continue;
                        }
                        let cap = graph.edge(eid).capacity;
                        match slot.get(&y) {
                            Some(&s) if best[s].2 >= cap => {}
                            Some(&s) => best[s] = (y, eid, cap),
                            None => {
                                slot.insert(y, best.len());
                                best.push((y, eid, cap));
                            }
                        }
                    }
                }
                if best.is_empty() {
                    break;
                }
                let boundary: f64 = best.iter().map(|b| b.2).sum();
                if radius > 0 && boundary < 0.5 * inside_cap {
                    break;
                }
                frontier.clear();
                for (y, eid, cap) in best {
                    ball[y] = id;
                    tree.push(eid);
                    members.push(y);
                    frontier.push(y);
                    inside_cap += cap + internal[y];
                }
            }
        }
        for c in cluster.iter_mut() {
            *c = ball[*c];
        }
        clusters = balls;
    }
    tree
}

/// Per-edge capacity stretch with respect to `tree_edges` (1 on tree edges).
pub fn capacity_stretch(graph: &Graph, tree_edges: &[usize]) -> Result<Vec<f64>> {
    let n = graph.n();
    let mut in_tree = vec![false; graph.m()];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &id in tree_edges {
        in_tree[id] = true;
        let e = graph.edge(id);
        adj[e.tail].push((e.head, e.capacity));
        adj[e.head].push((e.tail, e.capacity));
    }
    // Root at 0, BFS order; up[j][v] / low[j][v] = 2^j-th ancestor and bottleneck on the way.
    let mut parent = vec![0usize; n];
    let mut parent_cap = vec![f64::INFINITY; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    let mut reached = 1;
    while let Some(v) = queue.pop_front() {
        for &(w, cap) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = v;
                parent_cap[w] = cap;
                depth[w] = depth[v] + 1;
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    if reached != n {
        return Err(FlowError::domain("tree edges do not span the graph"));
    }
    let levels = (usize::BITS - n.leading_zeros()).max(1) as usize;
    let mut up = vec![parent];
    let mut low = vec![parent_cap];
    for j in 1..levels {
        let (pu, pl) = (&up[j - 1], &low[j - 1]);
        let nu: Vec<usize> = (0..n).map(|v| pu[pu[v]]).collect();
        let nl: Vec<f64> = (0..n).map(|v| pl[v].min(pl[pu[v]])).collect();
        up.push(nu);
        low.push(nl);
    }
    let bottleneck = |mut a: usize, mut b: usize| -> f64 {
        let mut best = f64::INFINITY;
        if depth[a] < depth[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut diff = depth[a] - depth[b];
        let mut j = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                best = best.min(low[j][a]);
                a = up[j][a];
            }
            diff >>= 1;
            j += 1;
        }
        if a == b {
            return best;
        }
        for j in (0..levels).rev() {
            if up[j][a] != up[j][b] {
                best = best.min(low[j][a]).min(low[j][b]);
                a = up[j][a];
                b = up[j][b];
            }
        }
        best.min(low[0][a]).min(low[0][b])
    };
    Ok(graph
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            if in_tree[id] {
                1.0
            } else {
                e.capacity / bottleneck(e.tail, e.head)
            }
        })
        .collect())
}

/// Keep probabilities `min(1, oversample * stretch / kappa)` (1 on tree edges).
pub fn keep_probabilities(stretch: &[f64], in_tree: &[bool], kappa: f64, oversample: f64) -> Vec<f64> {
    stretch
        .iter()
        .zip(in_tree)
        .map(|(&s, &t)| if t { 1.0 } else { (oversample * s / kappa).min(1.0) })
        .collect()
}

/// Samples an ultra-sparsifier of a connected graph.
pub fn ultra_sparsify(
    graph: &Graph,
    kappa: f64,
    params: &SparsifyParams,
    seed: u64,
) -> Result<UltraSparsifier> {
    if !(kappa > 1.0) {
        return Err(FlowError::domain(format!("kappa must exceed 1, got {kappa}")));
    }
    let tree = spanning_tree(graph, params.strategy, seed)?;
    let stretch = capacity_stretch(graph, &tree)?;
    sample_with_tree(graph, &tree, &stretch, kappa, params.oversample, seed)
}

/// Sampling step of [`ultra_sparsify`] for a precomputed tree and stretches.
pub fn sample_with_tree(
    graph: &Graph,
    tree: &[usize],
    stretch: &[f64],
    kappa: f64,
    oversample: f64,
    seed: u64,
) -> Result<UltraSparsifier> {
    if !(kappa > 1.0) {
        return Err(FlowError::domain(format!("kappa must exceed 1, got {kappa}")));
    }
    let mut in_tree = vec![false; graph.m()];
    for &id in tree {
        in_tree[id] = true;
    }
    let probs = keep_probabilities(stretch, &in_tree, kappa, oversample);
    let mut rng = seeded(crate::rng::derive_seed(seed, 0x5a3));
    let mut edges: Vec<Edge> = tree.iter().map(|&id| *graph.edge(id)).collect();
    let mut origin: Vec<usize> = tree.to_vec();
    for (id, e) in graph.edges().iter().enumerate() {
        if in_tree[id] {
            continue;
        }
        let p = probs[id];
        // Draw for every off-tree edge so the stream does not depend on p.
        let draw: f64 = rng.gen();
        if draw < p {
            edges.push(Edge {
                capacity: e.capacity / p,
                ..*e
            });
            origin.push(id);
        }
    }
    let off_tree_count = edges.len() - tree.len();
    let budget = edge_budget(kappa, graph.m(), graph.n(), oversample);
    if off_tree_count as f64 > budget.ceil() {
        return Err(FlowError::Postcondition(format!(
            "sparsifier kept {off_tree_count} off-tree edges, budget {budget:.1}"
        )));
    }
    Ok(UltraSparsifier {
        graph: Graph::new(graph.n(), edges)?,
        tree_edges: (0..tree.len()).collect(),
        kappa_target: kappa,
        off_tree_count,
        origin,
    })
}

/// Smallest `kappa` whose expected off-tree count is at most `target`.
pub fn kappa_for_expected_edges(stretch: &[f64], in_tree: &[bool], oversample: f64, target: f64) -> f64 {
    let expected = |kappa: f64| -> f64 {
        keep_probabilities(stretch, in_tree, kappa, oversample)
            .iter()
            .zip(in_tree)
            .filter(|(_, &t)| !t)
            .map(|(p, _)| p)
            .sum()
    };
    let mut lo = 1.0 + 1e-9;
    if expected(lo) <= target {
        return lo.max(1.0 + 1e-6);
    }
    let mut hi = 2.0;
    while expected(hi) > target && hi < 1e15 {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if expected(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Best `kappa` with `u_G(S) ~_kappa u_H(S)` over all proper cuts: the ratio of
/// the largest to the smallest `u_H(S) / u_G(S)`.
pub fn measure_cut_distortion(g: &Graph, h: &Graph) -> Result<f64> {
    let n = g.n();
    if h.n() != n {
        return Err(FlowError::Dimension {
            expected: n,
            actual: h.n(),
        });
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(FlowError::domain(format!(
            "cut enumeration limited to n <= {BRUTE_FORCE_MAX_N}"
        )));
    }
    if n < 2 {
        return Ok(1.0);
    }
    let cap = |graph: &Graph, mask: u32| -> f64 {
        graph
            .edges()
            .iter()
            .filter(|e| (mask >> e.tail & 1) != (mask >> e.head & 1))
            .map(|e| e.capacity)
            .sum()
    };
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    // Cuts and complements coincide, so fix vertex n-1 outside.
    for mask in 1u32..(1u32 << (n - 1)) {
        let (cg, ch) = (cap(g, mask), cap(h, mask));
        if cg == 0.0 {
            if ch == 0.0 {
                continue;
            }
            return Ok(f64::INFINITY);
        }
        let r = ch / cg;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if lo == 0.0 {
        return Ok(f64::INFINITY);
    }
    if !lo.is_finite() {
        return Ok(1.0);
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, Capacities, Family};

    #[test]
    fn tree_input_is_its_own_tree() {
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (1, 2, 3.0), (1, 3, 2.0)]).unwrap();
        for s in [TreeStrategy::MaxCapacity, TreeStrategy::LowStretchHeuristic] {
            assert_eq!(spanning_tree(&g, s, 9).unwrap(), vec![0, 1, 2]);
        }
    }

    #[test]
    fn triangle_max_capacity() {
        let g = Graph::from_triples(3, &[(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)]).unwrap();
        let t = spanning_tree(&g, TreeStrategy::MaxCapacity, 0).unwrap();
        let caps: Vec<f64> = t.iter().map(|&id| g.edge(id).capacity).collect();
        assert_eq!(caps, vec![3.0, 2.0]);
    }

    #[test]
    fn grid_trees_span() {
        let g = generate(&Family::Grid2d { rows: 4, cols: 4 }, Capacities::Unit, 0).unwrap();
        for s in [TreeStrategy::MaxCapacity, TreeStrategy::LowStretchHeuristic] {
            for seed in 0..5 {
                let t = spanning_tree(&g, s, seed).unwrap();
                assert_eq!(t.len(), 15);
                assert!(is_spanning_tree(&g, &t));
            }
        }
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(matches!(
            spanning_tree(&g, TreeStrategy::MaxCapacity, 0),
            Err(FlowError::Disconnected)
        ));
    }

    #[test]
    fn stretch_is_bottleneck_ratio() {
        // Tree 0-1 (cap 4), 1-2 (cap 2); off-tree 0-2 cap 1.
        let g = Graph::from_triples(3, &[(0, 1, 4.0), (1, 2, 2.0), (0, 2, 1.0)]).unwrap();
        let s = capacity_stretch(&g, &[0, 1]).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 0.5]);
    }

    #[test]
    fn tree_input_keeps_exact_cuts() {
        let g = generate(&Family::TreePlusNoise { n: 8, extra: 0 }, Capacities::Uniform { lo: 0.5, hi: 3.0 }, 2)
            .unwrap();
        let us = ultra_sparsify(&g, 3.0, &SparsifyParams::default(), 1).unwrap();
        assert_eq!(us.off_tree_count, 0);
        assert_eq!(measure_cut_distortion(&g, &us.graph).unwrap(), 1.0);
    }

    #[test]
    fn kappa_must_exceed_one() {
        let g = Graph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        assert!(ultra_sparsify(&g, 1.0, &SparsifyParams::default(), 0).is_err());
    }

    #[test]
    fn distortion_identity_and_scaling() {
        let g = generate(&Family::RandomGnm { n: 7, m: 12 }, Capacities::Uniform { lo: 0.1, hi: 10.0 }, 4)
            .unwrap();
        assert!((measure_cut_distortion(&g, &g).unwrap() - 1.0).abs() < 1e-12);
        let doubled = g.scaled(2.0).unwrap();
        assert!((measure_cut_distortion(&g, &doubled).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distortion_of_k4_minus_edge() {
        let mut t = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                t.push((a, b, 1.0));
            }
        }
        let g = Graph::from_triples(4, &t).unwrap();
        let h = Graph::from_triples(4, &t[1..]).unwrap();
        // Brute force: {0}: 2/3, {1}: 2/3 ... {0,1}: 4/4, {0,2}: 3/4. Range [2/3, 1].
        let d = measure_cut_distortion(&g, &h).unwrap();
        assert!((d - 1.5).abs() < 1e-12, "{d}");
    }

    #[test]
    fn deterministic_for_seed() {
        let g = generate(&Family::RandomGnm { n: 10, m: 30 }, Capacities::Uniform { lo: 0.1, hi: 10.0 }, 3)
            .unwrap();
        let p = SparsifyParams::default();
        let a = ultra_sparsify(&g, 4.0, &p, 11).unwrap();
        let b = ultra_sparsify(&g, 4.0, &p, 11).unwrap();
        assert_eq!(a.graph, b.graph);
    }
}
