//! Undirected capacitated multigraphs, demands, flows and cuts.
//!
//! Every edge carries a fixed orientation (tail to head) that is only used to
//! sign flow values; congestion is always measured with `|f_e|`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

/// Relative tolerance used for capacity and ratio comparisons.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
}

impl Edge {
    /// The endpoint opposite to `v`.
    #[inline]
    pub fn other(&self, v: usize) -> usize {
        if v == self.tail {
            self.head
        } else {
            self.tail
        }
    }
}

/// An incidence entry: edge id and +1 when the vertex is the tail, -1 when it is the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub sign: i8,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    incidences: Vec<Incidence>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Graph {
    /// Builds a graph, validating capacities and endpoints.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        for (id, e) in edges.iter().enumerate() {
            if e.tail >= n {
                return Err(FlowError::VertexOutOfRange(e.tail));
            }
            if e.head >= n {
                return Err(FlowError::VertexOutOfRange(e.head));
            }
            if e.tail == e.head {
                return Err(FlowError::domain(format!("edge {id} is a self-loop")));
            }
            if !(e.capacity.is_finite() && e.capacity > 0.0) {
                return Err(FlowError::domain(format!(
                    "edge {id} has non-positive or non-finite capacity {}",
                    e.capacity
                )));
            }
        }
        let (offsets, incidences) = build_adjacency(n, &edges);
        Ok(Graph {
            n,
            edges,
            offsets,
            incidences,
        })
    }

    /// Convenience constructor from `(tail, head, capacity)` triples.
    pub fn from_triples(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        Graph::new(
            n,
            triples
                .iter()
                .map(|&(tail, head, capacity)| Edge {
                    tail,
                    head,
                    capacity,
                })
                .collect(),
        )
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    #[inline]
    pub fn incident(&self, v: usize) -> &[Incidence] {
        &self.incidences[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sum of capacities of edges incident to `v`.
    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.incident(v)
            .iter()
            .map(|inc| self.edges[inc.edge].capacity)
            .sum()
    }

    pub fn total_capacity(&self) -> f64 {
        self.edges.iter().map(|e| e.capacity).sum()
    }

    pub fn min_capacity(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.capacity)
            .fold(f64::INFINITY, f64::min)
    }

    /// Rebuilds the adjacency index from the edge list and compares.
    pub fn audit_adjacency(&self) -> bool {
        let (offsets, incidences) = build_adjacency(self.n, &self.edges);
        offsets == self.offsets && incidences == self.incidences
    }

    /// Component id per vertex and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut comp = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for inc in self.incident(v) {
                    let w = self.edges[inc.edge].other(v);
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().1 == 1
    }

    /// Net outflow at each vertex, `(A f)_v = sum of signed incident flow`.
    pub fn divergence(&self, flow: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (e, &f) in self.edges.iter().zip(flow) {
            out[e.tail] += f;
            out[e.head] -= f;
        }
        out
    }

    /// Per-edge potential differences `(A^T p)_e = p_tail - p_head`.
    pub fn potential_drop(&self, potential: &[f64]) -> Vec<f64> {
        self.edges
            .iter()
            .map(|e| potential[e.tail] - potential[e.head])
            .collect()
    }

    /// `max_e |f_e| / u_e`.
    pub fn congestion(&self, flow: &[f64]) -> f64 {
        self.edges
            .iter()
            .zip(flow)
            .map(|(e, f)| f.abs() / e.capacity)
            .fold(0.0, f64::max)
    }

    /// Graph with the same vertex set and the capacities multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Graph> {
        Graph::new(
            self.n,
            self.edges
                .iter()
                .map(|e| Edge {
                    capacity: e.capacity * factor,
                    ..*e
                })
                .collect(),
        )
    }

    /// Subgraph induced on `vertices` (given in the order that defines new ids),
    /// together with the original edge id of every kept edge.
    pub fn induced(&self, vertices: &[usize]) -> (Graph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut edges = Vec::new();
        let mut origin = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            let (a, b) = (local[e.tail], local[e.head]);
            if a != usize::MAX && b != usize::MAX {
                edges.push(Edge {
                    tail: a,
                    head: b,
                    capacity: e.capacity,
                });
                origin.push(id);
            }
        }
        let (offsets, incidences) = build_adjacency(vertices.len(), &edges);
        (
            Graph {
                n: vertices.len(),
                edges,
                offsets,
                incidences,
            },
            origin,
        )
    }
}

fn build_adjacency(n: usize, edges: &[Edge]) -> (Vec<usize>, Vec<Incidence>) {
    let mut offsets = vec![0usize; n + 1];
    for e in edges {
        offsets[e.tail + 1] += 1;
        offsets[e.head + 1] += 1;
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let mut fill = offsets.clone();
    let mut incidences = vec![Incidence { edge: 0, sign: 0 }; 2 * edges.len()];
    for (id, e) in edges.iter().enumerate() {
        incidences[fill[e.tail]] = Incidence { edge: id, sign: 1 };
        fill[e.tail] += 1;
        incidences[fill[e.head]] = Incidence { edge: id, sign: -1 };
        fill[e.head] += 1;
    }
    (offsets, incidences)
}

/// Per-vertex demands; positive entries are supplies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandVector(pub Vec<f64>);

impl DemandVector {
    pub fn zeros(n: usize) -> Self {
        DemandVector(vec![0.0; n])
    }

    /// `value` units from `s` to `t`.
    pub fn st(n: usize, s: usize, t: usize, value: f64) -> Self {
        let mut b = vec![0.0; n];
        b[s] += value;
        b[t] -= value;
        DemandVector(b)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn scaled(&self, factor: f64) -> DemandVector {
        DemandVector(self.0.iter().map(|x| x * factor).collect())
    }

    /// Per-component sums for the component labelling of a graph.
    pub fn component_sums(&self, comp: &[usize], count: usize) -> Vec<f64> {
        let mut sums = vec![0.0; count];
        for (v, &b) in self.0.iter().enumerate() {
            sums[comp[v]] += b;
        }
        sums
    }

    /// Checks the zero-sum condition per connected component of `graph`,
    /// with absolute tolerance `1e-9` scaled by the demand magnitude.
    pub fn is_balanced_on(&self, graph: &Graph) -> bool {
        let (comp, count) = graph.components();
        let tol = 1e-9 * self.max_abs().max(1.0);
        self.component_sums(&comp, count)
            .iter()
            .all(|s| s.abs() <= tol)
    }
}

/// Per-edge signed flow values relative to the fixed edge orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow(pub Vec<f64>);

impl Flow {
    pub fn zeros(m: usize) -> Self {
        Flow(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A vertex subset kept as a sorted, duplicate-free sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CutSet(Vec<usize>);

impl CutSet {
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        CutSet(vertices)
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        CutSet(
            mask.iter()
                .enumerate()
                .filter_map(|(v, &inside)| inside.then_some(v))
                .collect(),
        )
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &v in &self.0 {
            mask[v] = true;
        }
        mask
    }

    pub fn complement(&self, n: usize) -> CutSet {
        let mask = self.mask(n);
        CutSet((0..n).filter(|&v| !mask[v]).collect())
    }

    pub fn is_proper(&self, n: usize) -> bool {
        !self.0.is_empty() && self.0.len() < n && self.0.iter().all(|&v| v < n)
    }

    /// Shortlex order: smaller sets first, then lexicographic.
    pub fn shortlex_cmp(&self, other: &CutSet) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// A flow paired with a cut certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCutSolution {
    pub flow: Flow,
    pub cut: CutSet,
    pub flow_congestion: f64,
    /// `|b(S)| / u(S)` of `cut`; a lower bound on the optimal congestion.
    pub cut_ratio: f64,
    /// `flow_congestion / cut_ratio - 1`, measured.
    pub epsilon_achieved: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FlowCutSolution {
    /// Sets `epsilon_achieved` and `converged` from the current congestion and cut ratio.
    pub(crate) fn certify(&mut self, epsilon: f64) {
        self.epsilon_achieved = achieved_epsilon(self.flow_congestion, self.cut_ratio);
        self.converged = self.epsilon_achieved <= epsilon * (1.0 + REL_TOL);
    }
}

pub(crate) fn achieved_epsilon(congestion: f64, cut_ratio: f64) -> f64 {
    if congestion <= 0.0 {
        0.0
    } else if cut_ratio <= 0.0 {
        f64::INFINITY
    } else {
        (congestion / cut_ratio - 1.0).max(0.0)
    }
}

/// Total capacity of edges with exactly one endpoint in `cut`.
pub fn cut_capacity(graph: &Graph, cut: &CutSet) -> Result<f64> {
    if !cut.is_proper(graph.n()) {
        return Err(FlowError::domain("cut must be a non-empty proper subset"));
    }
    Ok(cut_capacity_mask(graph, &cut.mask(graph.n())))
}

pub(crate) fn cut_capacity_mask(graph: &Graph, mask: &[bool]) -> f64 {
    graph
        .edges()
        .iter()
        .filter(|e| mask[e.tail] != mask[e.head])
        .map(|e| e.capacity)
        .sum()
}

/// `b(S)`, the total demand inside `cut`.
pub fn cut_demand(b: &DemandVector, cut: &CutSet) -> f64 {
    cut.vertices().iter().map(|&v| b.0[v]).sum()
}

/// `|b(S)| / u(S)`; infinite when a nonzero demand faces zero capacity.
pub fn cut_ratio(graph: &Graph, b: &DemandVector, cut: &CutSet) -> Result<f64> {
    let cap = cut_capacity(graph, cut)?;
    Ok(ratio(cut_demand(b, cut).abs(), cap))
}

pub(crate) fn ratio(demand: f64, capacity: f64) -> f64 {
    if capacity > 0.0 {
        demand / capacity
    } else if demand > 1e-12 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub max_conservation_residual: f64,
    pub congestion: f64,
}

/// Conservation residual and congestion of `flow` against demands `b`.
pub fn validate_flow(graph: &Graph, flow: &Flow, b: &DemandVector) -> Result<FlowReport> {
    if flow.len() != graph.m() {
        return Err(FlowError::Dimension {
            expected: graph.m(),
            actual: flow.len(),
        });
    }
    if b.len() != graph.n() {
        return Err(FlowError::Dimension {
            expected: graph.n(),
            actual: b.len(),
        });
    }
    let div = graph.divergence(flow.as_slice());
    let max_conservation_residual = div
        .iter()
        .zip(b.as_slice())
        .map(|(d, b)| (b - d).abs())
        .fold(0.0, f64::max);
    Ok(FlowReport {
        max_conservation_residual,
        congestion: graph.congestion(flow.as_slice()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_2_1() -> Graph {
        Graph::from_triples(3, &[(0, 1, 2.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_triples(2, &[(0, 1, 0.0)]).is_err());
        assert!(Graph::from_triples(2, &[(0, 0, 1.0)]).is_err());
        assert!(Graph::from_triples(2, &[(0, 2, 1.0)]).is_err());
        assert!(Graph::from_triples(2, &[(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn adjacency_audit_and_signs() {
        let g = path_2_1();
        assert!(g.audit_adjacency());
        assert_eq!(g.incident(1).len(), 2);
        assert_eq!(g.incident(0)[0], Incidence { edge: 0, sign: 1 });
        assert_eq!(g.incident(2)[0], Incidence { edge: 1, sign: -1 });
    }

    #[test]
    fn k4_singleton_cut() {
        let mut t = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                t.push((a, b, 1.0));
            }
        }
        let g = Graph::from_triples(4, &t).unwrap();
        assert_eq!(cut_capacity(&g, &CutSet::new(vec![0])).unwrap(), 3.0);
    }

    #[test]
    fn path_cuts() {
        let g = path_2_1();
        assert_eq!(cut_capacity(&g, &CutSet::new(vec![0])).unwrap(), 2.0);
        assert_eq!(cut_capacity(&g, &CutSet::new(vec![2])).unwrap(), 1.0);
        assert_eq!(cut_capacity(&g, &CutSet::new(vec![0, 2])).unwrap(), 3.0);
        assert!(cut_capacity(&g, &CutSet::new(vec![])).is_err());
        assert!(cut_capacity(&g, &CutSet::new(vec![0, 1, 2])).is_err());
    }

    #[test]
    fn demand_of_cuts() {
        let b = DemandVector(vec![1.0, 0.0, -1.0]);
        assert_eq!(cut_demand(&b, &CutSet::new(vec![0])), 1.0);
        assert_eq!(cut_demand(&b, &CutSet::new(vec![0, 1])), 1.0);
    }

    #[test]
    fn validate_single_edge() {
        let g = Graph::from_triples(2, &[(0, 1, 1.0)]).unwrap();
        let b = DemandVector(vec![1.0, -1.0]);
        let r = validate_flow(&g, &Flow(vec![1.0]), &b).unwrap();
        assert_eq!(r.max_conservation_residual, 0.0);
        assert_eq!(r.congestion, 1.0);
        let r = validate_flow(&g, &Flow(vec![0.0]), &b).unwrap();
        assert_eq!(r.max_conservation_residual, 1.0);
        assert_eq!(r.congestion, 0.0);
        assert!(validate_flow(&g, &Flow(vec![0.0, 1.0]), &b).is_err());
    }

    #[test]
    fn validate_split_cycle() {
        // 0-1-2-3-0, two units from 0 to 2 split over both sides.
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
            .unwrap();
        let b = DemandVector(vec![2.0, 0.0, -2.0, 0.0]);
        let f = Flow(vec![1.0, 1.0, -1.0, -1.0]);
        let r = validate_flow(&g, &f, &b).unwrap();
        assert_eq!(r.max_conservation_residual, 0.0);
        assert_eq!(r.congestion, 1.0);
    }

    #[test]
    fn components_and_balance() {
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(g.components().1, 2);
        assert!(DemandVector(vec![1.0, -1.0, 2.0, -2.0]).is_balanced_on(&g));
        assert!(!DemandVector(vec![1.0, 0.0, 0.0, -1.0]).is_balanced_on(&g));
    }

    #[test]
    fn shortlex_prefers_smaller_sets() {
        let a = CutSet::new(vec![2]);
        let b = CutSet::new(vec![0, 1]);
        assert_eq!(a.shortlex_cmp(&b), std::cmp::Ordering::Less);
    }
}
