//! Vertex elimination and lifting of approximators back through it.
//!
//! Degree counts distinct neighbours, with parallel edges summed. A vertex with
//! one neighbour folds into it. A vertex with two neighbours `a`, `c` is spliced:
//! its two edges become one `a - c` edge of capacity `min(c_a, c_c)` and the
//! vertex folds into the side of the larger capacity. With that choice any cut
//! of the reduced graph pulls back to a cut of the same capacity, and the
//! folded set of every eliminated vertex is itself a cut that becomes a row of
//! the lifted approximator.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::approximator::{CongestionApproximatorOp, DecompositionTree};
use crate::error::{FlowError, Result};
use crate::graph::{Edge, Graph};
use crate::sparsify::{ultra_sparsify, SparsifyParams, UltraSparsifier};

/// Multiplier recorded for one lift in the quality bookkeeping.
pub const LIFT_CONSTANT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Elimination {
    Degree1 {
        vertex: usize,
        kept_neighbor: usize,
        edge_capacity: f64,
    },
    Degree2 {
        vertex: usize,
        neighbors: [usize; 2],
        merged_edge_capacity: f64,
        original_capacities: [f64; 2],
    },
}

impl Elimination {
    pub fn vertex(&self) -> usize {
        match *self {
            Elimination::Degree1 { vertex, .. } | Elimination::Degree2 { vertex, .. } => vertex,
        }
    }

    /// The neighbour the vertex folds into.
    pub fn representative(&self) -> usize {
        match *self {
            Elimination::Degree1 { kept_neighbor, .. } => kept_neighbor,
            Elimination::Degree2 {
                neighbors,
                original_capacities,
                ..
            } => {
                if original_capacities[0] >= original_capacities[1] {
                    neighbors[0]
                } else {
                    neighbors[1]
                }
            }
        }
    }

    /// Boundary capacity of the folded set at elimination time.
    pub fn boundary_capacity(&self) -> f64 {
        match *self {
            Elimination::Degree1 { edge_capacity, .. } => edge_capacity,
            Elimination::Degree2 {
                original_capacities,
                ..
            } => original_capacities[0] + original_capacities[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionMap {
    pub eliminated: Vec<Elimination>,
    /// Original vertex to reduced vertex id.
    pub vertex_map: Vec<usize>,
    /// Reduced vertex id to original vertex.
    pub survivors: Vec<usize>,
    pub reduced: Graph,
}

impl ReductionMap {
    pub fn n_original(&self) -> usize {
        self.vertex_map.len()
    }

    /// Identity map (nothing eliminated) for `graph`.
    pub fn identity(graph: &Graph) -> Self {
        ReductionMap {
            eliminated: Vec::new(),
            vertex_map: (0..graph.n()).collect(),
            survivors: (0..graph.n()).collect(),
            reduced: graph.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComposedMap {
    pub ultra: UltraSparsifier,
    pub reduction: ReductionMap,
    pub kappa: f64,
}

type Adjacency = Vec<BTreeMap<usize, f64>>;

fn aggregate(graph: &Graph) -> Adjacency {
    let mut adj: Adjacency = vec![BTreeMap::new(); graph.n()];
    for e in graph.edges() {
        *adj[e.tail].entry(e.head).or_insert(0.0) += e.capacity;
        *adj[e.head].entry(e.tail).or_insert(0.0) += e.capacity;
    }
    adj
}

fn remove_vertex(adj: &mut Adjacency, v: usize) -> Vec<(usize, f64)> {
    let nbrs: Vec<(usize, f64)> = std::mem::take(&mut adj[v]).into_iter().collect();
    for &(w, _) in &nbrs {
        adj[w].remove(&v);
    }
    nbrs
}

fn add_capacity(adj: &mut Adjacency, a: usize, b: usize, cap: f64) {
    *adj[a].entry(b).or_insert(0.0) += cap;
    *adj[b].entry(a).or_insert(0.0) += cap;
}

fn finish(n: usize, adj: &Adjacency, alive: &[bool], eliminated: Vec<Elimination>) -> Result<ReductionMap> {
    let survivors: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let mut new_id = vec![usize::MAX; n];
    for (i, &v) in survivors.iter().enumerate() {
        new_id[v] = i;
    }
    let mut target: Vec<usize> = (0..n).collect();
    for rec in eliminated.iter().rev() {
        target[rec.vertex()] = target[rec.representative()];
    }
    let vertex_map: Vec<usize> = target.iter().map(|&t| new_id[t]).collect();
    let mut edges = Vec::new();
    for &a in &survivors {
        for (&b, &cap) in &adj[a] {
            if a < b {
                edges.push(Edge {
                    tail: new_id[a],
                    head: new_id[b],
                    capacity: cap,
                });
            }
        }
    }
    Ok(ReductionMap {
        eliminated,
        vertex_map,
        survivors: survivors.clone(),
        reduced: Graph::new(survivors.len(), edges)?,
    })
}

/// Eliminates degree-one and degree-two vertices until every survivor has at
/// least three neighbours or one vertex is left.
pub fn reduce(graph: &Graph) -> Result<(Graph, ReductionMap)> {
    let n = graph.n();
    if !graph.is_connected() {
        return Err(FlowError::Disconnected);
    }
    let mut adj = aggregate(graph);
    let mut alive = vec![true; n];
    let mut alive_count = n;
    let mut queue: BTreeSet<usize> = (0..n).filter(|&v| adj[v].len() <= 2).collect();
    let mut eliminated = Vec::new();
    while alive_count > 1 {
        let Some(v) = queue.pop_first() else { break };
        if !alive[v] || adj[v].len() > 2 {
            continue;
        }
        let nbrs = remove_vertex(&mut adj, v);
        let rec = match nbrs.as_slice() {
            [(w, cap)] => Elimination::Degree1 {
                vertex: v,
                kept_neighbor: *w,
                edge_capacity: *cap,
            },
            [(a, ca), (c, cc)] => {
                let merged = ca.min(*cc);
                add_capacity(&mut adj, *a, *c, merged);
                Elimination::Degree2 {
                    vertex: v,
                    neighbors: [*a, *c],
                    merged_edge_capacity: merged,
                    original_capacities: [*ca, *cc],
                }
            }
            _ => unreachable!("connected graph with more than one live vertex"),
        };
        alive[v] = false;
        alive_count -= 1;
        for &(w, _) in &nbrs {
            if adj[w].len() <= 2 {
                queue.insert(w);
            }
        }
        eliminated.push(rec);
    }
    let map = finish(n, &adj, &alive, eliminated)?;
    let off_tree = graph.m() as f64 - (n as f64 - 1.0);
    if map.reduced.m() as f64 > 4.0 * off_tree.max(0.0) {
        return Err(FlowError::Postcondition(format!(
            "reduced graph has {} edges for {} off-tree edges",
            map.reduced.m(),
            off_tree
        )));
    }
    Ok((map.reduced.clone(), map))
}

/// Replays the recorded eliminations on `graph` and rebuilds the reduced graph,
/// checking every record against the evolving adjacency.
pub fn replay(graph: &Graph, map: &ReductionMap) -> Result<Graph> {
    let n = graph.n();
    if map.n_original() != n {
        return Err(FlowError::Dimension {
            expected: n,
            actual: map.n_original(),
        });
    }
    let mut adj = aggregate(graph);
    let mut alive = vec![true; n];
    for rec in &map.eliminated {
        let v = rec.vertex();
        if !alive[v] {
            return Err(FlowError::domain(format!("vertex {v} eliminated twice")));
        }
        let nbrs = remove_vertex(&mut adj, v);
        match (rec, nbrs.as_slice()) {
            (
                Elimination::Degree1 {
                    kept_neighbor,
                    edge_capacity,
                    ..
                },
                [(w, cap)],
            ) if w == kept_neighbor && cap == edge_capacity => {}
            (
                Elimination::Degree2 {
                    neighbors,
                    merged_edge_capacity,
                    original_capacities,
                    ..
                },
                [(a, ca), (c, cc)],
            ) if [*a, *c] == *neighbors && [*ca, *cc] == *original_capacities => {
                add_capacity(&mut adj, *a, *c, *merged_edge_capacity);
            }
            _ => {
                return Err(FlowError::domain(format!(
                    "record for vertex {v} does not match the graph"
                )))
            }
        }
        alive[v] = false;
    }
    Ok(finish(n, &adj, &alive, map.eliminated.clone())?.reduced)
}

/// Lifts a cluster tree over the reduced vertices to the original vertices:
/// every eliminated vertex becomes a cluster (its folded set) nested inside
/// the cluster of the vertex it folded into. Capacities are computed on `target`.
fn lift_tree(map: &ReductionMap, inner: &DecompositionTree, target: &Graph) -> Result<DecompositionTree> {
    let n = map.n_original();
    if target.n() != n {
        return Err(FlowError::Dimension {
            expected: n,
            actual: target.n(),
        });
    }
    if inner.n() != map.survivors.len() {
        return Err(FlowError::Dimension {
            expected: map.survivors.len(),
            actual: inner.n(),
        });
    }
    let k = inner.node_count();
    let mut parents: Vec<Option<usize>> = inner.nodes().iter().map(|node| node.parent).collect();
    let mut record_node = vec![usize::MAX; n];
    for (i, rec) in map.eliminated.iter().enumerate() {
        record_node[rec.vertex()] = k + i;
    }
    let mut leaf = vec![0usize; n];
    for (v, slot) in leaf.iter_mut().enumerate() {
        *slot = if record_node[v] != usize::MAX {
            record_node[v]
        } else {
            inner.leaf_assignment()[map.vertex_map[v]]
        };
    }
    for rec in &map.eliminated {
        let rep = rec.representative();
        parents.push(Some(leaf[rep]));
    }
    // Every vertex keeps a singleton row: split it off any leaf it shares.
    let mut shared = vec![false; parents.len()];
    for p in parents.iter().flatten() {
        shared[*p] = true;
    }
    let mut seen = vec![false; parents.len()];
    for &l in &leaf {
        shared[l] |= seen[l];
        seen[l] = true;
    }
    for slot in leaf.iter_mut() {
        if shared[*slot] {
            parents.push(Some(*slot));
            *slot = parents.len() - 1;
        }
    }
    DecompositionTree::from_parents(target, &parents, &leaf)
}

/// Approximator for the pre-reduction graph `h` from one for the reduced graph.
pub fn convert(
    map: &ReductionMap,
    reduced_op: &CongestionApproximatorOp,
    h: &Graph,
) -> Result<CongestionApproximatorOp> {
    if map.eliminated.is_empty() {
        let tree = lift_tree(map, reduced_op.tree(), h)?;
        return Ok(CongestionApproximatorOp::new(tree, reduced_op.quality()));
    }
    let tree = lift_tree(map, reduced_op.tree(), h)?;
    Ok(CongestionApproximatorOp::new(
        tree,
        reduced_op.quality() * LIFT_CONSTANT,
    ))
}

/// Ultra-sparsify `g`, then reduce the sparsifier.
pub fn ultra_sparsify_and_reduce(
    g: &Graph,
    kappa: f64,
    params: &SparsifyParams,
    seed: u64,
) -> Result<(Graph, ComposedMap)> {
    let ultra = ultra_sparsify(g, kappa, params, seed)?;
    compose(ultra)
}

/// Reduces an already sampled sparsifier.
pub fn compose(ultra: UltraSparsifier) -> Result<(Graph, ComposedMap)> {
    let (reduced, reduction) = reduce(&ultra.graph)?;
    let kappa = ultra.kappa_target;
    Ok((
        reduced,
        ComposedMap {
            ultra,
            reduction,
            kappa,
        },
    ))
}

/// Approximator for `g` from one for the reduced sparsifier. Row capacities
/// are exact cut capacities of `g`.
pub fn convert_composed(
    map: &ComposedMap,
    reduced_op: &CongestionApproximatorOp,
    g: &Graph,
) -> Result<CongestionApproximatorOp> {
    let tree = lift_tree(&map.reduction, reduced_op.tree(), g)?;
    let lift = if map.reduction.eliminated.is_empty() {
        1.0
    } else {
        LIFT_CONSTANT
    };
    Ok(CongestionApproximatorOp::new(
        tree,
        map.kappa * reduced_op.quality() * lift,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, Capacities, Family};
    use crate::graph::{cut_capacity, DemandVector};

    fn cycle(n: usize) -> Graph {
        let t: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Graph::from_triples(n, &t).unwrap()
    }

    #[test]
    fn path_collapses_to_a_point() {
        let g = generate(&Family::Path { n: 5, caps: None }, Capacities::Unit, 0).unwrap();
        let (h, map) = reduce(&g).unwrap();
        assert_eq!((h.n(), h.m()), (1, 0));
        assert_eq!(map.eliminated.len(), 4);
        assert_eq!(replay(&g, &map).unwrap(), h);
    }

    #[test]
    fn cycle_splices_down() {
        let g = cycle(6);
        let (h, map) = reduce(&g).unwrap();
        // Splices leave two vertices joined by capacity 2 (two unit paths),
        // which then fold into a single vertex.
        assert_eq!(h.n(), 1);
        let last = map.eliminated.last().unwrap();
        assert_eq!(last.boundary_capacity(), 2.0);
        assert!(matches!(last, Elimination::Degree1 { .. }));
        assert_eq!(replay(&g, &map).unwrap(), h);
    }

    #[test]
    fn grid_corners_splice_and_replay() {
        let g = generate(&Family::Grid2d { rows: 4, cols: 4 }, Capacities::Unit, 0).unwrap();
        let (h, map) = reduce(&g).unwrap();
        assert_eq!(map.eliminated.len(), 4);
        assert!(map
            .eliminated
            .iter()
            .all(|r| matches!(r, Elimination::Degree2 { merged_edge_capacity, .. } if *merged_edge_capacity == 1.0)));
        assert_eq!((h.n(), h.m()), (12, 20));
        assert_eq!(replay(&g, &map).unwrap(), h);
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = Graph::from_triples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(reduce(&g).is_err());
    }

    #[test]
    fn pulled_back_cuts_keep_capacity() {
        let g = generate(&Family::TreePlusNoise { n: 14, extra: 5 }, Capacities::Uniform { lo: 0.2, hi: 5.0 }, 8)
            .unwrap();
        let (h, map) = reduce(&g).unwrap();
        let k = h.n();
        assert!(k >= 2);
        for mask in 1u32..(1 << (k - 1)) {
            let reduced_cut: f64 = h
                .edges()
                .iter()
                .filter(|e| (mask >> e.tail & 1) != (mask >> e.head & 1))
                .map(|e| e.capacity)
                .sum();
            let side: Vec<usize> = (0..g.n())
                .filter(|&v| mask >> map.vertex_map[v] & 1 == 1)
                .collect();
            let original = cut_capacity(&g, &crate::graph::CutSet::new(side)).unwrap();
            assert!((reduced_cut - original).abs() < 1e-9 * original.max(1.0));
        }
    }

    #[test]
    fn identity_convert() {
        let g = generate(&Family::ExpanderLike { n: 10, degree: 4 }, Capacities::Unit, 1).unwrap();
        let op = CongestionApproximatorOp::new(DecompositionTree::singletons(&g).unwrap(), 3.0);
        let lifted = convert(&ReductionMap::identity(&g), &op, &g).unwrap();
        assert_eq!(lifted.tree(), op.tree());
        assert_eq!(lifted.quality(), 3.0);
    }

    #[test]
    fn path_fixture_rows() {
        let g = Graph::from_triples(3, &[(0, 1, 2.0), (1, 2, 1.0)]).unwrap();
        let (h, map) = reduce(&g).unwrap();
        let inner = CongestionApproximatorOp::new(DecompositionTree::singletons(&h).unwrap(), 1.0);
        let op = convert(&map, &inner, &g).unwrap();
        let rows = op.apply(&DemandVector(vec![1.0, 0.0, -1.0])).unwrap();
        let mut abs: Vec<f64> = rows.iter().map(|x| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        assert!(abs.contains(&1.0));
        assert!(abs.contains(&0.5));
        assert_eq!(*abs.last().unwrap(), 1.0);
    }
}
