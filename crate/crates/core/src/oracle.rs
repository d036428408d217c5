//! Exact ground-truth solvers for small and medium instances.
//!
//! None of this is used by the recursive pipeline itself; it exists to check it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::graph::{cut_capacity_mask, ratio, CutSet, DemandVector, Flow, Graph};

/// Largest vertex count accepted by [`brute_force_min_ratio_cut`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub witness_flow: Flow,
    pub witness_cut: CutSet,
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
    rev: usize,
}

/// Dinic's blocking-flow max flow on real capacities.
///
/// An undirected edge is a pair of opposing arcs that are each other's
/// reverse, both starting at capacity `u`, so residuals stay coupled and the
/// net flow on the edge is `u - residual(forward)`.
#[derive(Debug, Clone)]
pub(crate) struct Dinic {
    adj: Vec<Vec<Arc>>,
    level: Vec<i32>,
    iter: Vec<usize>,
    eps: f64,
}

impl Dinic {
    pub(crate) fn new(n: usize, eps: f64) -> Self {
        Dinic {
            adj: vec![Vec::new(); n],
            level: vec![0; n],
            iter: vec![0; n],
            eps,
        }
    }

    /// Adds an arc pair; returns the (vertex, index) handle of the forward arc.
    pub(crate) fn add_arc(&mut self, from: usize, to: usize, cap: f64, rev_cap: f64) -> (usize, usize) {
        let fwd = self.adj[from].len();
        let bwd = self.adj[to].len() + usize::from(from == to);
        self.adj[from].push(Arc { to, cap, rev: bwd });
        self.adj[to].push(Arc {
            to: from,
            cap: rev_cap,
            rev: fwd,
        });
        (from, fwd)
    }

    pub(crate) fn residual(&self, handle: (usize, usize)) -> f64 {
        self.adj[handle.0][handle.1].cap
    }

    fn bfs(&mut self, s: usize) {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for a in &self.adj[v] {
                if a.cap > self.eps && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: f64) -> f64 {
        if v == t {
            return pushed;
        }
        while self.iter[v] < self.adj[v].len() {
            let i = self.iter[v];
            let (to, cap) = (self.adj[v][i].to, self.adj[v][i].cap);
            if cap > self.eps && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, pushed.min(cap));
                if d > 0.0 {
                    self.adj[v][i].cap -= d;
                    let rev = self.adj[v][i].rev;
                    self.adj[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    pub(crate) fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.fill(0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
    }

    /// Vertices reachable from `s` in the residual network.
    pub(crate) fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for a in &self.adj[v] {
                if a.cap > self.eps && !seen[a.to] {
                    seen[a.to] = true;
                    queue.push_back(a.to);
                }
            }
        }
        seen
    }
}

fn tolerance(graph: &Graph) -> f64 {
    1e-12 * graph.edges().iter().map(|e| e.capacity).fold(1.0, f64::max)
}

fn undirected_network(graph: &Graph, extra_vertices: usize, scale: f64, eps: f64) -> (Dinic, Vec<(usize, usize)>) {
    let mut net = Dinic::new(graph.n() + extra_vertices, eps);
    let handles = graph
        .edges()
        .iter()
        .map(|e| net.add_arc(e.tail, e.head, scale * e.capacity, scale * e.capacity))
        .collect();
    (net, handles)
}

fn edge_flows(graph: &Graph, net: &Dinic, handles: &[(usize, usize)], scale: f64) -> Flow {
    Flow(
        graph
            .edges()
            .iter()
            .zip(handles)
            .map(|(e, &h)| scale * e.capacity - net.residual(h))
            .collect(),
    )
}

/// Exact s-t maximum flow with a min-cut witness (source side).
pub fn exact_max_flow_st(graph: &Graph, s: usize, t: usize) -> Result<OracleResult> {
    let n = graph.n();
    if s >= n {
        return Err(FlowError::VertexOutOfRange(s));
    }
    if t >= n {
        return Err(FlowError::VertexOutOfRange(t));
    }
    if s == t {
        return Err(FlowError::domain("source and sink coincide"));
    }
    let (mut net, handles) = undirected_network(graph, 0, 1.0, tolerance(graph));
    let value = net.max_flow(s, t);
    let side = net.reachable(s);
    Ok(OracleResult {
        value,
        witness_flow: edge_flows(graph, &net, &handles, 1.0),
        witness_cut: CutSet::from_mask(&side),
    })
}

struct Feasibility {
    feasible: bool,
    flow: Flow,
    side: Vec<bool>,
}

/// Routes `b` with capacities `t * u` if possible.
fn route_with_scale(graph: &Graph, b: &DemandVector, t: f64, supply: f64) -> Feasibility {
    let n = graph.n();
    let (source, sink) = (n, n + 1);
    let eps = tolerance(graph) * t.max(1.0);
    let (mut net, handles) = undirected_network(graph, 2, t, eps);
    for (v, &bv) in b.as_slice().iter().enumerate() {
        if bv > 0.0 {
            net.add_arc(source, v, bv, 0.0);
        } else if bv < 0.0 {
            net.add_arc(v, sink, -bv, 0.0);
        }
    }
    let routed = net.max_flow(source, sink);
    let reach = net.reachable(source);
    let slack = eps * b.as_slice().iter().filter(|&&x| x != 0.0).count() as f64;
    Feasibility {
        feasible: routed >= supply * (1.0 - 1e-12) - slack,
        flow: edge_flows(graph, &net, &handles, t),
        side: reach[..n].to_vec(),
    }
}

/// Minimum congestion `opt(b)` by bisection over a uniform capacity scale,
/// with a max-ratio cut witness recovered from the infeasible side.
pub fn exact_opt_congestion(graph: &Graph, b: &DemandVector) -> Result<OracleResult> {
    let n = graph.n();
    if b.len() != n {
        return Err(FlowError::Dimension {
            expected: n,
            actual: b.len(),
        });
    }
    let supply: f64 = b.as_slice().iter().filter(|&&x| x > 0.0).sum();
    if supply <= 0.0 {
        return Ok(OracleResult {
            value: 0.0,
            witness_flow: Flow::zeros(graph.m()),
            witness_cut: CutSet::new(vec![0]),
        });
    }

    // Unbalanced component: no finite scale routes it.
    let (comp, count) = graph.components();
    let tol = 1e-9 * b.max_abs().max(1.0);
    let sums = b.component_sums(&comp, count);
    if let Some(bad) = sums.iter().position(|s| s.abs() > tol) {
        let mask: Vec<bool> = comp.iter().map(|&c| c == bad).collect();
        return Ok(OracleResult {
            value: f64::INFINITY,
            witness_flow: Flow::zeros(graph.m()),
            witness_cut: CutSet::from_mask(&mask),
        });
    }

    // Any spanning forest routing is feasible; its congestion bounds the optimum.
    let mut lo = 0.0;
    let mut hi = forest_routing_congestion(graph, b).max(f64::MIN_POSITIVE);
    let mut best = route_with_scale(graph, b, hi, supply);
    for _ in 0..60 {
        if best.feasible {
            break;
        }
        hi *= 2.0;
        best = route_with_scale(graph, b, hi, supply);
    }
    let mut infeasible_side: Option<Vec<bool>> = None;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let probe = route_with_scale(graph, b, mid, supply);
        if probe.feasible {
            hi = mid;
            best = probe;
        } else {
            lo = mid;
            infeasible_side = Some(probe.side);
        }
    }

    // The residual-reachable side at an infeasible scale t has ratio > t.
    let witness_mask = match infeasible_side {
        Some(side) if side.iter().any(|&x| x) && !side.iter().all(|&x| x) => side,
        _ => best_singleton_mask(graph, b),
    };
    let demand: f64 = witness_mask
        .iter()
        .zip(b.as_slice())
        .filter(|(&inside, _)| inside)
        .map(|(_, &x)| x)
        .sum();
    let cut_value = ratio(demand.abs(), cut_capacity_mask(graph, &witness_mask));
    // Every cut ratio is a lower bound; the feasibility slack can leave `hi`
    // a hair under the true optimum, in which case the cut is the better value.
    let value = if cut_value.is_finite() && cut_value >= lo && cut_value <= hi * (1.0 + 1e-6) {
        cut_value.max(hi)
    } else {
        hi
    };
    Ok(OracleResult {
        value,
        witness_flow: best.flow,
        witness_cut: CutSet::from_mask(&witness_mask),
    })
}

/// Congestion of routing `b` along a BFS spanning forest.
fn forest_routing_congestion(graph: &Graph, b: &DemandVector) -> f64 {
    let n = graph.n();
    let mut parent_edge = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let start = order.len();
        order.push(root);
        let mut head = start;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for inc in graph.incident(v) {
                let w = graph.edge(inc.edge).other(v);
                if !seen[w] {
                    seen[w] = true;
                    parent_edge[w] = inc.edge;
                    order.push(w);
                }
            }
        }
    }
    let mut acc = b.0.clone();
    let mut worst = 0.0f64;
    for &v in order.iter().rev() {
        let id = parent_edge[v];
        if id == usize::MAX {
            continue;
        }
        let e = graph.edge(id);
        worst = worst.max(acc[v].abs() / e.capacity);
        let p = e.other(v);
        acc[p] += acc[v];
    }
    worst
}

fn best_singleton_mask(graph: &Graph, b: &DemandVector) -> Vec<bool> {
    let mut best = (0, -1.0);
    for v in 0..graph.n() {
        let r = ratio(b.0[v].abs(), graph.weighted_degree(v));
        if r > best.1 {
            best = (v, r);
        }
    }
    let mut mask = vec![false; graph.n()];
    mask[best.0] = true;
    mask
}

/// Exhaustive `argmax_S |b(S)| / u(S)` over all proper cuts, ties broken by
/// the shortlex-smallest canonical cut.
pub fn brute_force_min_ratio_cut(graph: &Graph, b: &DemandVector) -> Result<(CutSet, f64)> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(FlowError::domain(format!(
            "exhaustive enumeration limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    if n < 2 {
        return Err(FlowError::domain("need at least two vertices"));
    }
    if b.len() != n {
        return Err(FlowError::Dimension {
            expected: n,
            actual: b.len(),
        });
    }
    let full: u32 = (1u32 << n) - 1;
    let mut best: Option<(CutSet, f64)> = None;
    for mask in 1..full {
        let mut demand = 0.0;
        for (v, &bv) in b.as_slice().iter().enumerate() {
            if mask >> v & 1 == 1 {
                demand += bv;
            }
        }
        let cap: f64 = graph
            .edges()
            .iter()
            .filter(|e| (mask >> e.tail & 1) != (mask >> e.head & 1))
            .map(|e| e.capacity)
            .sum();
        let r = ratio(demand.abs(), cap);
        let better = match &best {
            None => true,
            Some((set, value)) => {
                if r > value * (1.0 + 1e-12) + 1e-300 {
                    true
                } else if r >= value * (1.0 - 1e-12) {
                    let cand = CutSet::new((0..n).filter(|v| mask >> v & 1 == 1).collect());
                    cand.shortlex_cmp(set).is_lt()
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((
                CutSet::new((0..n).filter(|v| mask >> v & 1 == 1).collect()),
                r,
            ));
        }
    }
    Ok(best.expect("n >= 2 has a proper cut"))
}
